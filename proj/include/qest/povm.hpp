#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qest/errors.hpp"
#include "qest/kernels.hpp"
#include "qest/matrix.hpp"
#include "qest/model.hpp"

namespace qest {

struct PovmElement {
    std::string label;
    PauliOperator op;

    [[nodiscard]] Herm2 matrix() const { return op.matrix(); }
};

/// Finite qubit measurement: labelled PSD elements summing to the identity.
class Povm {
public:
    static constexpr double completeness_tolerance = 1e-12;
    static constexpr double positivity_tolerance = 1e-12;

    explicit Povm(std::vector<PovmElement> elements) : elements_(std::move(elements)) {
        validate();
    }

    static Povm from_matrices(const std::vector<std::pair<std::string, Herm2>>& items) {
        std::vector<PovmElement> elems;
        elems.reserve(items.size());
        for (const auto& [label, m] : items) {
            elems.push_back({label, PauliOperator::from_matrix(m)});
        }
        return Povm(std::move(elems));
    }

    /// Two-outcome projective measurement of n . sigma, scaled by `weight`
    /// (weight = 1 gives a complete PVM on its own).
    static std::vector<PovmElement> projective_pair(const Vec3& direction, const std::string& prefix,
                                                    double weight = 1.0) {
        const Vec3 n = normalized(direction);
        return {{prefix + "+", {0.5 * weight, (0.5 * weight) * n}},
                {prefix + "-", {0.5 * weight, (-0.5 * weight) * n}}};
    }

    static Povm projective(const Vec3& direction, const std::string& prefix = "") {
        return Povm(projective_pair(direction, prefix));
    }

    [[nodiscard]] const std::vector<PovmElement>& elements() const noexcept { return elements_; }
    [[nodiscard]] std::size_t size() const noexcept { return elements_.size(); }
    [[nodiscard]] const PovmElement& operator[](std::size_t i) const { return elements_[i]; }

    [[nodiscard]] std::size_t index_of(const std::string& label) const {
        for (std::size_t i = 0; i < elements_.size(); ++i) {
            if (elements_[i].label == label) return i;
        }
        fail(ErrorCode::invalid_argument, "no POVM element labelled '" + label + "'");
    }

    /// Born-rule probabilities Tr(rho Pi_x).
    [[nodiscard]] std::vector<double> probabilities(const BlochVector& b) const {
        std::vector<double> p;
        p.reserve(elements_.size());
        for (const auto& e : elements_) p.push_back(e.op.expectation(b));
        return p;
    }

    [[nodiscard]] std::vector<double> probabilities(const ThetaParams& t) const {
        return probabilities(bloch_from_theta(t));
    }

    /// Largest entrywise deviation of sum(Pi_x) from the identity.
    [[nodiscard]] double completeness_residual() const {
        PauliOperator sum;
        for (const auto& e : elements_) {
            sum.c0 += e.op.c0;
            sum.c = sum.c + e.op.c;
        }
        sum.c0 -= 1.0;
        return sum.matrix().dense().max_abs();
    }

    /// Smallest eigenvalue over all elements.
    [[nodiscard]] double min_element_eigenvalue() const {
        double m = 1e300;
        for (const auto& e : elements_) m = std::min(m, e.op.c0 - norm(e.op.c));
        return m;
    }

private:
    void validate() const {
        if (elements_.empty()) fail(ErrorCode::invalid_povm, "POVM has no elements");
        for (std::size_t i = 0; i < elements_.size(); ++i) {
            for (std::size_t j = i + 1; j < elements_.size(); ++j) {
                if (elements_[i].label == elements_[j].label) {
                    fail(ErrorCode::invalid_povm, "duplicate POVM label '" + elements_[i].label + "'");
                }
            }
        }
        if (min_element_eigenvalue() < -positivity_tolerance) {
            fail(ErrorCode::invalid_povm, "POVM element is not positive semidefinite");
        }
        if (completeness_residual() > completeness_tolerance) {
            fail(ErrorCode::invalid_povm, "POVM elements do not sum to the identity");
        }
    }

    std::vector<PovmElement> elements_;
};

} // namespace qest
