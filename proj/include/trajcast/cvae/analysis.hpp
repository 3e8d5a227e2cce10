#pragma once

#include <memory>
#include <vector>

#include "trajcast/cvae/model.hpp"

namespace trajcast::cvae {

struct ModeUsage {
    std::vector<double> mass;    // mean prior probability per mode
    std::vector<int> by_mass;    // mode indices sorted by descending mass
    std::vector<int> cover_99;   // smallest prefix of by_mass reaching 0.99
};

// Averages p(z|x) over the given windows. Throws InputError when empty.
ModeUsage mode_usage(const Model& model, const Dataset& ds, const std::vector<WindowRef>& windows);

// New model over the kept modes only: decoder one-hot columns and
// prior/proposal head rows are selected, everything else is copied.
// Surviving mode probabilities renormalize through the softmax.
std::unique_ptr<Model> prune_modes(const Model& model, const std::vector<int>& keep);

}  // namespace trajcast::cvae
