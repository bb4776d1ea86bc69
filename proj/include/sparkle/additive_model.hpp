#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sparkle/common.hpp"
#include "sparkle/kernel.hpp"

namespace sparkle {

/// Covariate/response sample with the original time indices it came from.
struct SampleBatch {
    Eigen::MatrixXd covariates; // n x d
    Eigen::VectorXd responses;  // n
    std::vector<long long> index_set;

    int n() const { return static_cast<int>(covariates.rows()); }
    int dim() const { return static_cast<int>(covariates.cols()); }

    void validate() const {
        if (covariates.rows() < 1) throw InputError("SampleBatch: empty batch");
        if (covariates.rows() != responses.size())
            throw InputError("SampleBatch: row count does not match responses");
        if (!responses.allFinite() || !covariates.allFinite())
            throw InputError("SampleBatch: non-finite data");
    }
};

/// One univariate component in the representer expansion.
struct Component {
    std::vector<double> anchors;
    std::vector<double> coeffs;

    bool all_zero() const {
        return std::all_of(coeffs.begin(), coeffs.end(),
                           [](double c) { return c == 0.0; });
    }
};

/// Sparse additive function f(x) = sum_j f_(j)(x_(j)), each component a
/// kernel expansion over its own anchor list. Dimensions absent from the
/// component map are identically zero. Immutable in spirit: fitted once,
/// then only read.
class AdditiveFunction {
public:
    AdditiveFunction() = default;
    AdditiveFunction(int dim, KernelSpec kernel)
        : dim_(dim), kernel_(kernel) {
        kernel_.validate();
        if (dim < 1) throw InputError("AdditiveFunction: dim must be >= 1");
    }

    int dim() const { return dim_; }
    const KernelSpec& kernel() const { return kernel_; }
    const std::map<int, Component>& components() const { return components_; }

    void set_component(int j, Component comp) {
        if (j < 0 || j >= dim_)
            throw InputError("AdditiveFunction: component index out of range");
        if (comp.anchors.size() != comp.coeffs.size() || comp.anchors.empty())
            throw InputError("AdditiveFunction: anchors and coeffs must "
                             "have equal positive length");
        components_[j] = std::move(comp);
    }

    double evaluate(const Eigen::VectorXd& x) const {
        if (x.size() != dim_)
            throw InputError("AdditiveFunction: dimension mismatch in evaluate");
        double total = 0.0;
        for (const auto& [j, comp] : components_)
            total += evaluate_component(comp, x[j]);
        return total;
    }

    double evaluate_component(int j, double xj) const {
        auto it = components_.find(j);
        return it == components_.end() ? 0.0 : evaluate_component(it->second, xj);
    }

    /// sum_j sqrt(beta_j' K_j beta_j) with K_j the (unjittered) Gram of the
    /// anchors. Zero iff every component is zero.
    double rkhs_group_norm() const {
        double total = 0.0;
        for (const auto& [j, comp] : components_) total += component_rkhs_norm(comp);
        return total;
    }

    double component_rkhs_norm(int j) const {
        auto it = components_.find(j);
        return it == components_.end() ? 0.0 : component_rkhs_norm(it->second);
    }

    /// sum_j sqrt((1/n) sum_i f_(j)(x_{i,(j)})^2) over the batch inputs.
    double empirical_group_norm(const SampleBatch& batch) const {
        batch.validate();
        if (batch.dim() != dim_)
            throw InputError("AdditiveFunction: batch dimension mismatch");
        const int n = batch.n();
        double total = 0.0;
        for (const auto& [j, comp] : components_) {
            double ss = 0.0;
            for (int i = 0; i < n; ++i) {
                const double v = evaluate_component(comp, batch.covariates(i, j));
                ss += v * v;
            }
            total += std::sqrt(ss / n);
        }
        return total;
    }

    /// Dimensions whose coefficient vector is not all zero.
    std::set<int> support() const {
        std::set<int> s;
        for (const auto& [j, comp] : components_)
            if (!comp.all_zero()) s.insert(j);
        return s;
    }

    /// Support after dropping components with RKHS norm at most
    /// rel_threshold * (largest component norm + 1e-12). The relative rule
    /// keeps support comparisons deterministic when a solver leaves
    /// near-zeros instead of exact zeros.
    std::set<int> pruned_support(double rel_threshold = 1e-8) const {
        double max_norm = 0.0;
        std::map<int, double> norms;
        for (const auto& [j, comp] : components_) {
            const double nj = component_rkhs_norm(comp);
            norms[j] = nj;
            max_norm = std::max(max_norm, nj);
        }
        const double cut = rel_threshold * (max_norm + 1e-12);
        std::set<int> s;
        for (const auto& [j, nj] : norms)
            if (nj > cut) s.insert(j);
        return s;
    }

    /// Copy with sub-threshold components removed.
    AdditiveFunction pruned(double rel_threshold = 1e-8) const {
        AdditiveFunction out(dim_, kernel_);
        const std::set<int> keep = pruned_support(rel_threshold);
        for (const auto& [j, comp] : components_)
            if (keep.count(j)) out.components_[j] = comp;
        return out;
    }

    AdditiveFunction scaled(double c) const {
        AdditiveFunction out(dim_, kernel_);
        for (const auto& [j, comp] : components_) {
            Component sc = comp;
            for (double& b : sc.coeffs) b *= c;
            out.components_[j] = std::move(sc);
        }
        return out;
    }

private:
    double evaluate_component(const Component& comp, double xj) const {
        double v = 0.0;
        for (std::size_t i = 0; i < comp.anchors.size(); ++i)
            v += comp.coeffs[i] * eval_kernel(kernel_, xj, comp.anchors[i]);
        return v;
    }

    double component_rkhs_norm(const Component& comp) const {
        const GramMatrix g = gram(kernel_, comp.anchors, 0.0);
        Eigen::Map<const Eigen::VectorXd> beta(comp.coeffs.data(),
                                               static_cast<long>(comp.coeffs.size()));
        const double q = beta.dot(g.entries * beta);
        return std::sqrt(std::max(q, 0.0));
    }

    int dim_ = 0;
    KernelSpec kernel_;
    std::map<int, Component> components_;
};

inline void to_json(nlohmann::json& j, const AdditiveFunction& f) {
    nlohmann::json comps = nlohmann::json::object();
    for (const auto& [dim, comp] : f.components())
        comps[std::to_string(dim)] = {{"anchors", comp.anchors},
                                      {"coeffs", comp.coeffs}};
    j = nlohmann::json{{"dim", f.dim()}, {"kernel", f.kernel()},
                       {"components", comps}};
}

inline void from_json(const nlohmann::json& j, AdditiveFunction& f) {
    KernelSpec spec = j.at("kernel").get<KernelSpec>();
    f = AdditiveFunction(j.at("dim").get<int>(), spec);
    for (const auto& [key, value] : j.at("components").items()) {
        Component comp;
        comp.anchors = value.at("anchors").get<std::vector<double>>();
        comp.coeffs = value.at("coeffs").get<std::vector<double>>();
        f.set_component(std::stoi(key), std::move(comp));
    }
}

} // namespace sparkle
