#include "trajcast/core/rng.hpp"

#include <istream>
#include <ostream>

namespace trajcast {

void Rng::save(std::ostream& os) const { os << eng_; }
void Rng::load(std::istream& is) { is >> eng_; }

}  // namespace trajcast
