#include "rbmlab/model.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "rbmlab/errors.hpp"
#include "rbmlab/noise.hpp"

namespace rbmlab {

Drift Drift::polynomial(std::vector<double> coefficients) {
    Drift d;
    d.coefficients_ = std::move(coefficients);
    return d;
}

Drift Drift::custom(VectorField field) {
    if (!field) throw ConfigError("custom drift requires a callable");
    Drift d;
    d.custom_ = std::move(field);
    return d;
}

void Drift::operator()(std::span<const double> x, std::span<double> out) const {
    if (custom_) {
        custom_(x, out);
        return;
    }
    for (std::size_t c = 0; c < x.size(); ++c) out[c] = polynomial_at(x[c]);
}

Kernel Kernel::custom(VectorField field) {
    if (!field) throw ConfigError("custom kernel requires a callable");
    Kernel k(KernelFamily::custom, 1.0);
    k.custom_ = std::move(field);
    return k;
}

void Kernel::operator()(std::span<const double> z, std::span<double> out) const {
    visit_kernel(*this, [&](auto fn) { fn(z.data(), out.data(), z.size()); });
}

ModelSpec::ModelSpec(ModelParams params) : p_(std::move(params)) {
    if (p_.dimension == 0) throw ConfigError("model dimension must be positive");
    if (!(p_.sigma >= 0.0) || !std::isfinite(p_.sigma)) throw ConfigError("sigma must be >= 0");
    if (!(p_.kernel_lipschitz >= 0.0)) throw ConfigError("kernel Lipschitz constant must be >= 0");
    if (p_.regime == Regime::strong) {
        if (!(p_.confinement_rate > 0.0)) throw ConfigError("strong regime requires r > 0");
        if (!(p_.confinement_rate > 2.0 * p_.kernel_lipschitz))
            throw ConfigError("strong regime requires r > 2L");
    }
}

std::optional<LinearCoefficients> linear_coefficients(const ModelSpec& model) {
    const auto& drift = model.drift();
    if (!drift.is_polynomial()) return std::nullopt;
    const auto& c = drift.coefficients();
    if (c.size() > 2) {
        for (std::size_t m = 2; m < c.size(); ++m)
            if (c[m] != 0.0) return std::nullopt;
    }
    if (!c.empty() && c[0] != 0.0) return std::nullopt;
    const double a = c.size() >= 2 ? -c[1] : 0.0;
    double kappa = 0.0;
    switch (model.kernel().family()) {
        case KernelFamily::zero: break;
        case KernelFamily::linear: kappa = model.kernel().strength(); break;
        default:
            if (!model.kernel().is_zero()) return std::nullopt;
    }
    return LinearCoefficients{a, kappa};
}

namespace {

Preset make_preset(std::string_view name) {
    if (name == "linear-strong") {
        ModelParams p;
        p.name = "linear-strong";
        p.drift = Drift::polynomial({0.0, -1.0});
        p.kernel = Kernel::linear(0.2);
        p.sigma = 0.5;
        p.regime = Regime::strong;
        p.confinement_rate = 1.0;
        p.kernel_lipschitz = 0.2;
        // Stationary law of the mean-field equation is N(0, sigma^2 / (1 + kappa)).
        return {p.name, ModelSpec(p), {0.0, 0.25 / 1.2}};
    }
    if (name == "ou-noninteracting") {
        ModelParams p;
        p.name = "ou-noninteracting";
        p.drift = Drift::polynomial({0.0, -1.0});
        p.kernel = Kernel::zero();
        p.sigma = 1.0;
        p.regime = Regime::strong;
        p.confinement_rate = 1.0;
        p.kernel_lipschitz = 0.0;
        return {p.name, ModelSpec(p), {0.0, 1.0}};
    }
    if (name == "cubic-weak") {
        ModelParams p;
        p.name = "cubic-weak";
        p.drift = Drift::polynomial({0.0, 1.0, 0.0, -1.0});
        p.kernel = Kernel::sine(0.2);
        p.sigma = 0.5;
        p.regime = Regime::weak;
        p.one_sided_lipschitz = 1.0;
        p.kernel_lipschitz = 0.2;
        return {p.name, ModelSpec(p), {}};
    }
    if (name == "zero") {
        ModelParams p;
        p.name = "zero";
        p.drift = Drift::polynomial({});
        p.kernel = Kernel::zero();
        p.sigma = 0.0;
        p.regime = Regime::weak;
        return {p.name, ModelSpec(p), {}};
    }
    throw NameError("unknown preset '" + std::string(name) + "'");
}

}  // namespace

Preset preset_info(std::string_view name) { return make_preset(name); }

ModelSpec preset(std::string_view name) { return make_preset(name).model; }

std::vector<std::string> preset_names() {
    return {"linear-strong", "ou-noninteracting", "cubic-weak", "zero"};
}

RegularityReport probe_regularity(const ModelSpec& model, std::size_t n_probes, double box,
                                  std::uint64_t seed) {
    if (n_probes == 0) throw ConfigError("n_probes must be >= 1");
    if (!(box > 0.0)) throw ConfigError("probe box must be positive");
    const std::size_t d = model.dimension();
    CounterRng rng(NoiseStream(seed, Purpose::probe), NoiseKey{});
    std::vector<double> z1(d), z2(d), b1(d), b2(d), k1(d), k2(d);
    RegularityReport rep;
    rep.n_probes = n_probes;
    rep.max_onesided_quotient = -std::numeric_limits<double>::infinity();
    rep.max_kernel_quotient = 0.0;
    for (std::size_t n = 0; n < n_probes; ++n) {
        double dist2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            z1[c] = box * (2.0 * rng.uniform() - 1.0);
            z2[c] = box * (2.0 * rng.uniform() - 1.0);
            dist2 += (z1[c] - z2[c]) * (z1[c] - z2[c]);
        }
        if (dist2 == 0.0) continue;
        model.drift()(z1, b1);
        model.drift()(z2, b2);
        model.kernel()(z1, k1);
        model.kernel()(z2, k2);
        double inner = 0.0, kdiff2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            inner += (z1[c] - z2[c]) * (b1[c] - b2[c]);
            kdiff2 += (k1[c] - k2[c]) * (k1[c] - k2[c]);
        }
        rep.max_onesided_quotient = std::max(rep.max_onesided_quotient, inner / dist2);
        rep.max_kernel_quotient = std::max(rep.max_kernel_quotient, std::sqrt(kdiff2 / dist2));
    }
    return rep;
}

bool within_declared(const ModelSpec& model, const RegularityReport& report, double rel_tol) {
    const double beta = model.one_sided_bound();
    const double lip = model.kernel_lipschitz();
    return report.max_onesided_quotient <= beta + rel_tol * std::max(1.0, std::abs(beta)) &&
           report.max_kernel_quotient <= lip + rel_tol * std::max(1.0, lip);
}

}  // namespace rbmlab
