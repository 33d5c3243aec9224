#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rbmlab {

/// Which confinement assumption a model claims: one-sided Lipschitz drift with
/// constant beta (weak), or strong confinement with rate r > 2L (strong).
enum class Regime { weak, strong };

using VectorField = std::function<void(std::span<const double>, std::span<double>)>;

/// External field b. Either componentwise polynomial b_c(x) = sum_m a_m x_c^m, or
/// an arbitrary closure.
class Drift {
public:
    Drift() = default;

    static Drift polynomial(std::vector<double> coefficients);
    static Drift custom(VectorField field);

    bool is_polynomial() const noexcept { return !custom_; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }

    /// Scalar polynomial evaluation (Horner). Only valid for polynomial drifts.
    double polynomial_at(double x) const noexcept {
        double acc = 0.0;
        for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    void operator()(std::span<const double> x, std::span<double> out) const;

private:
    std::vector<double> coefficients_;
    VectorField custom_;
};

enum class KernelFamily { zero, linear, sine, tanh, custom };

/// Interaction kernel K. Built-in families act componentwise:
/// linear K(z) = -k z, sine K(z) = -k sin z, tanh K(z) = -k tanh z.
class Kernel {
public:
    Kernel() = default;

    static Kernel zero() { return Kernel(KernelFamily::zero, 0.0); }
    static Kernel linear(double strength) { return Kernel(KernelFamily::linear, strength); }
    static Kernel sine(double strength) { return Kernel(KernelFamily::sine, strength); }
    static Kernel tanh(double strength) { return Kernel(KernelFamily::tanh, strength); }
    static Kernel custom(VectorField field);

    KernelFamily family() const noexcept { return family_; }
    double strength() const noexcept { return strength_; }
    bool is_zero() const noexcept {
        return family_ == KernelFamily::zero || (family_ != KernelFamily::custom && strength_ == 0.0);
    }
    /// K(-z) = -K(z) for every built-in family.
    bool is_odd() const noexcept { return family_ != KernelFamily::custom; }
    const VectorField& field() const noexcept { return custom_; }

    void operator()(std::span<const double> z, std::span<double> out) const;

private:
    Kernel(KernelFamily family, double strength) : family_(family), strength_(strength) {}

    KernelFamily family_ = KernelFamily::zero;
    double strength_ = 0.0;
    VectorField custom_;
};

namespace kernel_fn {

struct Zero {
    static constexpr bool zero = true;
    void operator()(const double*, double* out, std::size_t d) const noexcept {
        for (std::size_t c = 0; c < d; ++c) out[c] = 0.0;
    }
};
struct Linear {
    static constexpr bool zero = false;
    double k;
    void operator()(const double* z, double* out, std::size_t d) const noexcept {
        for (std::size_t c = 0; c < d; ++c) out[c] = -k * z[c];
    }
};
struct Sine {
    static constexpr bool zero = false;
    double k;
    void operator()(const double* z, double* out, std::size_t d) const noexcept {
        for (std::size_t c = 0; c < d; ++c) out[c] = -k * std::sin(z[c]);
    }
};
struct Tanh {
    static constexpr bool zero = false;
    double k;
    void operator()(const double* z, double* out, std::size_t d) const noexcept {
        for (std::size_t c = 0; c < d; ++c) out[c] = -k * std::tanh(z[c]);
    }
};
struct Custom {
    static constexpr bool zero = false;
    const VectorField* f;
    void operator()(const double* z, double* out, std::size_t d) const {
        (*f)(std::span<const double>(z, d), std::span<double>(out, d));
    }
};

}  // namespace kernel_fn

/// Calls f with a concrete kernel functor so hot loops inline the evaluation.
template <class F>
decltype(auto) visit_kernel(const Kernel& kernel, F&& f) {
    switch (kernel.family()) {
        case KernelFamily::linear: return f(kernel_fn::Linear{kernel.strength()});
        case KernelFamily::sine: return f(kernel_fn::Sine{kernel.strength()});
        case KernelFamily::tanh: return f(kernel_fn::Tanh{kernel.strength()});
        case KernelFamily::custom: return f(kernel_fn::Custom{&kernel.field()});
        case KernelFamily::zero: break;
    }
    return f(kernel_fn::Zero{});
}

struct ModelParams {
    std::string name = "custom";
    std::size_t dimension = 1;
    Drift drift;
    Kernel kernel;
    double sigma = 0.0;
    Regime regime = Regime::weak;
    /// beta in the one-sided Lipschitz bound (weak regime).
    double one_sided_lipschitz = 0.0;
    /// r in the strong confinement bound (strong regime).
    double confinement_rate = 0.0;
    double kernel_lipschitz = 0.0;
};

/// One interacting particle system: dX = b(X) dt + K-interaction dt + sqrt(2) sigma dW.
/// Immutable after construction.
class ModelSpec {
public:
    explicit ModelSpec(ModelParams params);

    const std::string& name() const noexcept { return p_.name; }
    std::size_t dimension() const noexcept { return p_.dimension; }
    const Drift& drift() const noexcept { return p_.drift; }
    const Kernel& kernel() const noexcept { return p_.kernel; }
    double sigma() const noexcept { return p_.sigma; }
    Regime regime() const noexcept { return p_.regime; }
    double confinement_rate() const noexcept { return p_.confinement_rate; }
    double kernel_lipschitz() const noexcept { return p_.kernel_lipschitz; }

    /// Effective one-sided constant: beta (weak) or -r (strong).
    double one_sided_bound() const noexcept {
        return p_.regime == Regime::strong ? -p_.confinement_rate : p_.one_sided_lipschitz;
    }

    const ModelParams& params() const noexcept { return p_; }

private:
    ModelParams p_;
};

/// b(x) = -a x with K(z) = -k z (k may be 0).
struct LinearCoefficients {
    double a;
    double kappa;
};

/// Coefficients when the model is linear in the sense above, nullopt otherwise.
std::optional<LinearCoefficients> linear_coefficients(const ModelSpec& model);

struct AnalyticFacts {
    std::optional<double> stationary_mean;
    std::optional<double> stationary_variance;
};

struct Preset {
    std::string name;
    ModelSpec model;
    AnalyticFacts facts;
};

/// "linear-strong", "ou-noninteracting", "cubic-weak", "zero". Throws NameError otherwise.
ModelSpec preset(std::string_view name);
Preset preset_info(std::string_view name);
std::vector<std::string> preset_names();

struct RegularityReport {
    double max_onesided_quotient = 0.0;
    double max_kernel_quotient = 0.0;
    std::size_t n_probes = 0;
};

/// Sampled maxima of (z1-z2).(b(z1)-b(z2))/|z1-z2|^2 and |K(z1)-K(z2)|/|z1-z2|
/// over uniform pairs in [-box, box]^d.
RegularityReport probe_regularity(const ModelSpec& model, std::size_t n_probes, double box,
                                  std::uint64_t seed = 0);

/// True when the probed quotients stay within the declared constants (relative slack).
bool within_declared(const ModelSpec& model, const RegularityReport& report,
                     double rel_tol = 1e-6);

}  // namespace rbmlab
