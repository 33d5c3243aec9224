#include "rbmlab/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include "rbmlab/errors.hpp"
#include "rbmlab/wasserstein.hpp"

namespace rbmlab {

Ensemble MeanFieldEnsemble::as_ensemble() const {
    Ensemble e(m, d);
    e.x = y;
    e.t = t;
    return e;
}

MeanFieldEnsemble make_meanfield(const InitialLaw& law, std::size_t m, const MeanFieldConfig& cfg,
                                 std::uint64_t seed, std::size_t d) {
    if (cfg.p < 2) throw ConfigError("p must be >= 2");
    if (m < cfg.p) throw ConfigError("mean-field ensemble needs M >= p");
    if (!cfg.slot_keys.empty() && cfg.slot_keys.size() != cfg.p)
        throw ConfigError("slot_keys must list one id per slot");
    StepPlan::for_interval(cfg.tau, cfg.n_substeps);
    const Ensemble e = init_iid(law, m, seed, d);
    MeanFieldEnsemble mf;
    mf.m = m;
    mf.d = d;
    mf.y = e.x;
    mf.config = cfg;
    return mf;
}

void draw_companions(const NoiseStream& noise, std::size_t m, std::size_t p, std::size_t i,
                     std::size_t k, bool with_replacement, std::span<std::uint32_t> out) {
    CounterRng rng(noise.with_purpose(Purpose::companion),
                   NoiseKey{0, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k), 0});
    for (std::size_t s = 0; s + 1 < p; ++s) {
        while (true) {
            std::uint64_t r = rng.below(m - 1);
            if (r >= i) ++r;
            const auto c = static_cast<std::uint32_t>(r);
            if (with_replacement ||
                std::find(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(s), c) ==
                    out.begin() + static_cast<std::ptrdiff_t>(s)) {
                out[s] = c;
                break;
            }
        }
    }
}

MeanFieldEnsemble ginf_step(const MeanFieldEnsemble& mf, const ModelSpec& model,
                            const NoiseStream& noise, Exec exec) {
    const auto& cfg = mf.config;
    const std::size_t p = cfg.p, d = mf.d, m = mf.m;
    if (m < p) throw ConfigError("mean-field ensemble needs M >= p");
    if (!cfg.with_replacement && m < p) throw ConfigError("too few samples for distinct companions");
    if (d != model.dimension()) throw ConfigError("ensemble and model dimensions differ");
    const auto plan = StepPlan::for_interval(cfg.tau, cfg.n_substeps);
    const double amp = std::sqrt(2.0 * model.sigma() * model.sigma() * plan.dt);
    const double inv = 1.0 / static_cast<double>(p - 1);
    MeanFieldEnsemble out = mf;
    const auto k = static_cast<std::uint32_t>(mf.k);

    parallel_for(m, exec, [&](std::size_t lo, std::size_t hi) {
        std::vector<std::uint32_t> comp(p - 1);
        std::vector<double> z(p * d), f(p * d), zz(d), kv(d), acc(d), xi(d);
        visit_kernel(model.kernel(), [&](auto fn) {
            for (std::size_t i = lo; i < hi; ++i) {
                draw_companions(noise, m, p, i, mf.k, cfg.with_replacement, comp);
                std::copy_n(mf.y.data() + i * d, d, z.data());
                for (std::size_t s = 1; s < p; ++s)
                    std::copy_n(mf.y.data() + std::size_t{comp[s - 1]} * d, d, z.data() + s * d);
                for (std::size_t j = 0; j < plan.n_substeps; ++j) {
                    for (std::size_t s = 0; s < p; ++s) {
                        std::span<double> fs(f.data() + s * d, d);
                        model.drift()(std::span<const double>(z.data() + s * d, d), fs);
                        if constexpr (!decltype(fn)::zero) {
                            std::fill(acc.begin(), acc.end(), 0.0);
                            for (std::size_t u = 0; u < p; ++u) {
                                if (u == s) continue;
                                for (std::size_t c = 0; c < d; ++c)
                                    zz[c] = z[s * d + c] - z[u * d + c];
                                fn(zz.data(), kv.data(), d);
                                for (std::size_t c = 0; c < d; ++c) acc[c] += kv[c];
                            }
                            for (std::size_t c = 0; c < d; ++c) fs[c] += inv * acc[c];
                        }
                    }
                    const double t = mf.t + static_cast<double>(j) * plan.dt;
                    for (std::size_t s = 0; s < p; ++s) {
                        if (amp > 0.0)
                            noise.normals(NoiseKey{cfg.slot_key(s), static_cast<std::uint32_t>(i), k,
                                                   static_cast<std::uint32_t>(j)},
                                          xi);
                        for (std::size_t c = 0; c < d; ++c) {
                            double& v = z[s * d + c];
                            v += f[s * d + c] * plan.dt;
                            if (amp > 0.0) v += amp * xi[c];
                        }
                        if (s == 0) check_finite(std::span<const double>(z.data(), d), i, t + plan.dt);
                    }
                }
                std::copy_n(z.data(), d, out.y.data() + i * d);
            }
        });
    });
    out.k = mf.k + 1;
    out.t = mf.t + cfg.tau;
    return out;
}

Ensemble mckean_vlasov_step(const Ensemble& e, const ModelSpec& model, double dt,
                            const NoiseStream& noise, StepIndex index, bool include_self,
                            Exec exec) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (e.d != model.dimension()) throw ConfigError("ensemble and model dimensions differ");
    const std::size_t n = e.n, d = e.d;
    const double inv = 1.0 / static_cast<double>(n);
    std::vector<double> f(n * d);
    parallel_for(n, exec, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> z(d), kv(d), acc(d);
        visit_kernel(model.kernel(), [&](auto fn) {
            for (std::size_t i = lo; i < hi; ++i) {
                std::span<double> fi(f.data() + i * d, d);
                model.drift()(e.row(i), fi);
                if constexpr (!decltype(fn)::zero) {
                    std::fill(acc.begin(), acc.end(), 0.0);
                    for (std::size_t j = 0; j < n; ++j) {
                        if (j == i && !include_self) continue;
                        for (std::size_t c = 0; c < d; ++c) z[c] = e.x[i * d + c] - e.x[j * d + c];
                        fn(z.data(), kv.data(), d);
                        for (std::size_t c = 0; c < d; ++c) acc[c] += kv[c];
                    }
                    for (std::size_t c = 0; c < d; ++c) fi[c] += inv * acc[c];
                }
                for (double c : fi)
                    if (!std::isfinite(c)) throw NumericalBlowup(i, e.t, "non-finite drift");
            }
        });
    });
    const double amp = std::sqrt(2.0 * model.sigma() * model.sigma() * dt);
    Ensemble out = e;
    parallel_for(n, exec, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> xi(d);
        for (std::size_t i = lo; i < hi; ++i) {
            if (amp > 0.0) noise.normals(index.key(i), xi);
            for (std::size_t c = 0; c < d; ++c) {
                out.x[i * d + c] += f[i * d + c] * dt;
                if (amp > 0.0) out.x[i * d + c] += amp * xi[c];
            }
            check_finite(out.row(i), i, e.t + dt);
        }
    });
    out.t = e.t + dt;
    return out;
}

void frozen_force_interval(std::span<double> x, const ModelSpec& model,
                           std::span<const ForceTable> tables, double tau,
                           const NoiseStream& noise, std::size_t k, std::uint32_t slot_key,
                           Exec exec) {
    if (model.dimension() != 1) throw DimensionError("frozen-force reference is one-dimensional");
    if (tables.empty()) throw ConfigError("need one force table per substep");
    const auto plan = StepPlan::for_interval(tau, tables.size());
    const double amp = std::sqrt(2.0 * model.sigma() * model.sigma() * plan.dt);
    const auto kk = static_cast<std::uint32_t>(k);
    parallel_for(x.size(), exec, [&](std::size_t lo, std::size_t hi) {
        double b;
        for (std::size_t i = lo; i < hi; ++i) {
            double v = x[i];
            for (std::size_t j = 0; j < plan.n_substeps; ++j) {
                model.drift()(std::span<const double>(&v, 1), std::span<double>(&b, 1));
                const double f = b + tables[j](v);
                v += f * plan.dt;
                if (amp > 0.0)
                    v += amp * noise.normal(NoiseKey{slot_key, static_cast<std::uint32_t>(i), kk,
                                                     static_cast<std::uint32_t>(j)});
            }
            check_finite(std::span<const double>(&v, 1), i, tau * static_cast<double>(k + 1));
            x[i] = v;
        }
    });
}

std::vector<double> expm(std::span<const double> a, std::size_t n) {
    auto matmul = [n](const std::vector<double>& l, const std::vector<double>& r) {
        std::vector<double> o(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                const double lik = l[i * n + k];
                if (lik == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) o[i * n + j] += lik * r[k * n + j];
            }
        return o;
    };
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(a[i * n + j]);
        norm = std::max(norm, row);
    }
    int squarings = 0;
    while (norm > 0.125) {
        norm *= 0.5;
        ++squarings;
    }
    const double scale = std::ldexp(1.0, -squarings);
    std::vector<double> s(a.begin(), a.end());
    for (double& v : s) v *= scale;
    std::vector<double> result(n * n, 0.0), term(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) result[i * n + i] = term[i * n + i] = 1.0;
    for (int order = 1; order <= 18; ++order) {
        term = matmul(term, s);
        for (double& v : term) v /= order;
        for (std::size_t i = 0; i < n * n; ++i) result[i] += term[i];
    }
    for (int q = 0; q < squarings; ++q) result = matmul(result, result);
    return result;
}

namespace {

struct LinearMap {
    double mean_factor;
    double var_factor;
    double var_offset;
};

LinearMap linear_interval_map(const ModelSpec& model, std::size_t p, double tau) {
    const auto lin = linear_coefficients(model);
    if (!lin || model.dimension() != 1)
        throw UnsupportedModel("Gaussian oracle needs b(x) = -a x and K(z) = -kappa z in 1D");
    if (p < 2) throw ConfigError("p must be >= 2");
    if (!(tau >= 0.0)) throw ConfigError("tau must be >= 0");
    const double a = lin->a, kappa = lin->kappa;
    const double s2 = model.sigma() * model.sigma();
    const double off = kappa / static_cast<double>(p - 1);
    // Drift matrix of the p-particle system.
    std::vector<double> A(p * p, off);
    for (std::size_t i = 0; i < p; ++i) A[i * p + i] = -(a + kappa);
    // Van Loan block [[-A, Q], [0, A^T]] tau with Q = 2 sigma^2 I.
    const std::size_t n2 = 2 * p;
    std::vector<double> C(n2 * n2, 0.0);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            C[i * n2 + j] = -A[i * p + j] * tau;
            C[(p + i) * n2 + (p + j)] = A[j * p + i] * tau;
        }
    for (std::size_t i = 0; i < p; ++i) C[i * n2 + (p + i)] = 2.0 * s2 * tau;
    const auto E = expm(C, n2);
    // F22 = e^{A^T tau}; F12; noise covariance W = F22^T F12.
    auto F22 = [&](std::size_t i, std::size_t j) { return E[(p + i) * n2 + (p + j)]; };
    auto F12 = [&](std::size_t i, std::size_t j) { return E[i * n2 + (p + j)]; };
    // Row 0 of e^{A tau} is column 0 of e^{A^T tau}.
    double mean_factor = 0.0, var_factor = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        const double e0j = F22(j, 0);
        mean_factor += e0j;
        var_factor += e0j * e0j;
    }
    double w00 = 0.0;
    for (std::size_t k = 0; k < p; ++k) w00 += F22(k, 0) * F12(k, 0);
    return {mean_factor, var_factor, std::max(w00, 0.0)};
}

}  // namespace

GaussianState gaussian_oracle(const ModelSpec& model, std::size_t p, double tau,
                              GaussianState state, std::size_t n_steps) {
    if (!(state.variance >= 0.0)) throw ConfigError("variance must be >= 0");
    const auto map = linear_interval_map(model, p, tau);
    for (std::size_t s = 0; s < n_steps; ++s) {
        state.mean *= map.mean_factor;
        state.variance = map.var_factor * state.variance + map.var_offset;
    }
    return state;
}

GaussianState gaussian_fixed_point(const ModelSpec& model, std::size_t p, double tau) {
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    const auto map = linear_interval_map(model, p, tau);
    if (!(map.var_factor < 1.0)) throw ConvergenceError("interval map is not contracting");
    return {0.0, map.var_offset / (1.0 - map.var_factor)};
}

InvariantResult iterate_to_invariant(
    const MeanFieldEnsemble& mf, const ModelSpec& model, const NoiseStream& noise, double tol,
    std::size_t max_steps, Exec exec,
    const std::function<void(const MeanFieldEnsemble&, double)>& on_step) {
    if (model.regime() != Regime::strong)
        throw ConfigError("invariant-measure iteration requires a strongly confining model");
    if (mf.d != 1) throw DimensionError("invariant-measure iteration uses 1D W_1");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    InvariantResult res;
    res.ensemble = mf;
    std::vector<double> prev(mf.y), cur;
    std::sort(prev.begin(), prev.end());
    std::size_t streak = 0;
    while (res.steps < max_steps) {
        res.ensemble = ginf_step(res.ensemble, model, noise, exec);
        ++res.steps;
        cur = res.ensemble.y;
        std::sort(cur.begin(), cur.end());
        const double w = w_q_sorted(prev, cur, 1.0);
        res.w1_trace.push_back(w);
        if (on_step) on_step(res.ensemble, w);
        streak = w < tol ? streak + 1 : 0;
        if (streak >= 5) return res;
        prev.swap(cur);
    }
    throw ConvergenceError("no invariant measure within " + std::to_string(max_steps) + " steps");
}

}  // namespace rbmlab
