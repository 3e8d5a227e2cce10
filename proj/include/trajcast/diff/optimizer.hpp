#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trajcast/diff/param.hpp"

namespace trajcast::diff {

// Descent with global-norm gradient clipping. step() consumes the
// accumulated gradients (clears them afterwards) and throws
// NumericalError naming the offending parameter if any gradient is
// non-finite.
class Optimizer {
public:
    explicit Optimizer(double lr, double clip_norm = 10.0) : lr_(lr), clip_norm_(clip_norm) {}
    virtual ~Optimizer() = default;

    void step(ParamStore& ps);

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }
    int64_t step_count() const { return t_; }

    // moment buffers by name, for checkpointing; empty for plain SGD
    virtual std::map<std::string, std::vector<double>> state() const { return {}; }
    virtual void load_state(const std::map<std::string, std::vector<double>>& st, int64_t step_count) {
        (void)st;
        t_ = step_count;
    }

protected:
    virtual void update(ParamStore& ps) = 0;

    double lr_;
    double clip_norm_;
    int64_t t_ = 0;
};

class Sgd final : public Optimizer {
public:
    using Optimizer::Optimizer;

private:
    void update(ParamStore& ps) override;
};

class Adam final : public Optimizer {
public:
    explicit Adam(double lr, double clip_norm = 10.0, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : Optimizer(lr, clip_norm), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    std::map<std::string, std::vector<double>> state() const override;
    void load_state(const std::map<std::string, std::vector<double>>& st, int64_t step_count) override;

private:
    void update(ParamStore& ps) override;

    double beta1_, beta2_, eps_;
    std::map<std::string, std::vector<double>> m_, v_;
};

}  // namespace trajcast::diff
