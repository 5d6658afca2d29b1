#pragma once

#include <memory>
#include <vector>

#include "swarmrelax/field.hpp"

namespace swarmrelax {

// Supplies the field each moving particle sees at a given configuration.
// Integrators rebuild fields from this per Runge-Kutta stage, so coupled
// systems read fresh neighbor positions while ambient setups stay fixed.
class FieldSystem {
public:
    virtual ~FieldSystem() = default;
    // Number of moving particles (the length of the position vectors the
    // integrators carry).
    virtual int size() const = 0;
    virtual std::shared_ptr<const Field> field(const std::vector<Vec2>& positions,
                                               int i) const = 0;
};

// Every particle interacts with every other through the pairwise model.
class ParticleSystem final : public FieldSystem {
public:
    ParticleSystem(int n, ModelParams params) : n_(n), params_(params) {
        if (n_ < 2) throw std::invalid_argument("ParticleSystem: need at least two particles");
        params_.validate();
    }
    int size() const override { return n_; }
    std::shared_ptr<const Field> field(const std::vector<Vec2>& positions, int i) const override {
        std::vector<Vec2> others;
        others.reserve(static_cast<size_t>(n_) - 1);
        for (int j = 0; j < n_; ++j) {
            if (j != i) others.push_back(positions[static_cast<size_t>(j)]);
        }
        return std::make_shared<ParticleField>(std::move(others), n_, params_);
    }
    const ModelParams& params() const { return params_; }

private:
    int n_;
    ModelParams params_;
};

// One moving particle in a fixed ambient field (synthetic bottleneck, or a
// snapshot of frozen neighbors).
class AmbientSystem final : public FieldSystem {
public:
    explicit AmbientSystem(std::shared_ptr<const Field> f) : field_(std::move(f)) {
        if (!field_) throw std::invalid_argument("AmbientSystem: null field");
    }
    int size() const override { return 1; }
    std::shared_ptr<const Field> field(const std::vector<Vec2>&, int) const override {
        return field_;
    }

private:
    std::shared_ptr<const Field> field_;
};

// Several moving particles, each in its own fixed field, with no coupling
// between them. Exercises the multi-particle integration paths with known
// independent dynamics.
class IndependentFieldsSystem final : public FieldSystem {
public:
    explicit IndependentFieldsSystem(std::vector<std::shared_ptr<const Field>> fields)
        : fields_(std::move(fields)) {
        if (fields_.empty()) throw std::invalid_argument("IndependentFieldsSystem: no fields");
    }
    int size() const override { return static_cast<int>(fields_.size()); }
    std::shared_ptr<const Field> field(const std::vector<Vec2>&, int i) const override {
        return fields_[static_cast<size_t>(i)];
    }

private:
    std::vector<std::shared_ptr<const Field>> fields_;
};

}  // namespace swarmrelax
