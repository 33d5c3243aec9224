#include "rbmlab/ensemble.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "rbmlab/errors.hpp"

namespace rbmlab {

namespace {

double at(const std::vector<double>& v, std::size_t c) { return v.size() == 1 ? v[0] : v[c]; }

void check_width(const std::vector<double>& v, std::size_t d, const char* what) {
    if (v.size() != 1 && v.size() != d)
        throw ConfigError(std::string(what) + " must have 1 or d entries");
}

}  // namespace

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<double> points, std::size_t d) {
    if (d == 0 || points.size() % d != 0) throw ConfigError("point array does not match dimension");
    const std::size_t n = points.size() / d;
    if (n == 0) throw ConfigError("empirical measure needs at least one point");
    EmpiricalMeasure m;
    m.d = d;
    m.points = std::move(points);
    m.weights.assign(n, 1.0 / static_cast<double>(n));
    return m;
}

EmpiricalMeasure EmpiricalMeasure::weighted(std::vector<double> points, std::vector<double> weights,
                                            std::size_t d) {
    if (d == 0 || points.size() != weights.size() * d)
        throw ConfigError("points and weights disagree in size");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weights must be finite and >= 0");
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("weights sum to zero");
    for (double& w : weights) w /= total;
    EmpiricalMeasure m;
    m.d = d;
    m.points = std::move(points);
    m.weights = std::move(weights);
    return m;
}

InitialLaw InitialLaw::gaussian(double mean, double variance) {
    return gaussian(std::vector<double>{mean}, std::vector<double>{variance});
}

InitialLaw InitialLaw::gaussian(std::vector<double> mean, std::vector<double> variance) {
    InitialLaw l;
    l.kind = Kind::gaussian;
    l.mean = std::move(mean);
    l.variance = std::move(variance);
    return l;
}

InitialLaw InitialLaw::uniform(double a, double b) {
    return uniform(std::vector<double>{a}, std::vector<double>{b});
}

InitialLaw InitialLaw::uniform(std::vector<double> a, std::vector<double> b) {
    InitialLaw l;
    l.kind = Kind::uniform;
    l.lower = std::move(a);
    l.upper = std::move(b);
    return l;
}

InitialLaw InitialLaw::point(double x0) { return point(std::vector<double>{x0}); }

InitialLaw InitialLaw::point(std::vector<double> x0) {
    InitialLaw l;
    l.kind = Kind::point;
    l.location = std::move(x0);
    return l;
}

InitialLaw InitialLaw::mixture(std::vector<InitialLaw> components, std::vector<double> weights) {
    InitialLaw l;
    l.kind = Kind::mixture;
    l.components = std::move(components);
    l.mixture_weights = std::move(weights);
    return l;
}

void InitialLaw::validate(std::size_t d) const {
    switch (kind) {
        case Kind::gaussian:
            check_width(mean, d, "mean");
            check_width(variance, d, "variance");
            for (double v : variance)
                if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("variance must be >= 0");
            for (double m : mean)
                if (!std::isfinite(m)) throw ConfigError("mean must be finite");
            break;
        case Kind::uniform:
            check_width(lower, d, "lower bound");
            check_width(upper, d, "upper bound");
            for (std::size_t c = 0; c < d; ++c)
                if (!(at(lower, c) < at(upper, c))) throw ConfigError("uniform law needs a < b");
            break;
        case Kind::point:
            check_width(location, d, "location");
            break;
        case Kind::mixture: {
            if (components.empty() || components.size() != mixture_weights.size())
                throw ConfigError("mixture needs one weight per component");
            double total = 0.0;
            for (double w : mixture_weights) {
                if (!(w >= 0.0)) throw ConfigError("mixture weights must be >= 0");
                total += w;
            }
            if (!(total > 0.0)) throw ConfigError("mixture weights sum to zero");
            for (const auto& comp : components) comp.validate(d);
            break;
        }
    }
}

void InitialLaw::sample(CounterRng& rng, std::span<const double> normals,
                        std::span<double> out) const {
    const std::size_t d = out.size();
    switch (kind) {
        case Kind::gaussian:
            for (std::size_t c = 0; c < d; ++c)
                out[c] = at(mean, c) + std::sqrt(at(variance, c)) * normals[c];
            return;
        case Kind::uniform:
            for (std::size_t c = 0; c < d; ++c)
                out[c] = at(lower, c) + (at(upper, c) - at(lower, c)) * rng.uniform();
            return;
        case Kind::point:
            for (std::size_t c = 0; c < d; ++c) out[c] = at(location, c);
            return;
        case Kind::mixture: {
            const double total =
                std::accumulate(mixture_weights.begin(), mixture_weights.end(), 0.0);
            double u = rng.uniform() * total;
            std::size_t pick = components.size() - 1;
            for (std::size_t c = 0; c < components.size(); ++c) {
                if (u < mixture_weights[c]) {
                    pick = c;
                    break;
                }
                u -= mixture_weights[c];
            }
            components[pick].sample(rng, normals, out);
            return;
        }
    }
}

Ensemble init_iid(const InitialLaw& law, std::size_t n, std::uint64_t seed, std::size_t d,
                  std::uint32_t replica) {
    if (n == 0) throw ConfigError("ensemble needs N >= 1");
    if (d == 0) throw ConfigError("dimension must be positive");
    law.validate(d);
    Ensemble e(n, d);
    e.stream_id = seed;
    const NoiseStream stream(seed, Purpose::initial);
    std::vector<double> z(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = static_cast<std::uint32_t>(i);
        stream.normals(NoiseKey{replica, id, 1, 0}, z);
        CounterRng rng(stream, NoiseKey{replica, id, 0, 0});
        law.sample(rng, z, e.row(i));
    }
    return e;
}

double moment(const Ensemble& e, double q) {
    if (!(q >= 1.0)) throw ConfigError("moment order must be >= 1");
    double acc = 0.0;
    for (std::size_t i = 0; i < e.n; ++i) {
        double r2 = 0.0;
        for (double c : e.row(i)) r2 += c * c;
        acc += q == 2.0 ? r2 : std::pow(std::sqrt(r2), q);
    }
    return acc / static_cast<double>(e.n);
}

void mean_force(const Ensemble& e, const ModelSpec& model, std::span<const double> x,
                std::span<double> out) {
    const std::size_t d = e.d;
    std::vector<double> z(d), k(d);
    std::fill(out.begin(), out.end(), 0.0);
    visit_kernel(model.kernel(), [&](auto fn) {
        if constexpr (decltype(fn)::zero) return;
        for (std::size_t j = 0; j < e.n; ++j) {
            const auto y = e.row(j);
            for (std::size_t c = 0; c < d; ++c) z[c] = x[c] - y[c];
            fn(z.data(), k.data(), d);
            for (std::size_t c = 0; c < d; ++c) out[c] += k[c];
        }
    });
    for (auto& c : out) c /= static_cast<double>(e.n);
}

std::vector<double> mean_force(const Ensemble& e, const ModelSpec& model,
                               std::span<const double> x) {
    std::vector<double> out(e.d);
    mean_force(e, model, x, out);
    return out;
}

double sample_mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = sample_mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size() - 1);
}

void write_csv(std::ostream& os, const Ensemble& e) {
    os << "particle_id";
    for (std::size_t c = 0; c < e.d; ++c) os << ",x_" << (c + 1);
    os << '\n';
    const auto old = os.precision(17);
    for (std::size_t i = 0; i < e.n; ++i) {
        os << i;
        for (double c : e.row(i)) os << ',' << c;
        os << '\n';
    }
    os.precision(old);
}

Ensemble read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("empty ensemble CSV");
    std::size_t d = 0;
    for (char ch : line) d += ch == ',';
    if (d == 0) throw ConfigError("ensemble CSV needs at least one coordinate column");
    Ensemble e;
    e.d = d;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        std::size_t cols = 0;
        while (std::getline(row, cell, ',')) {
            try {
                e.x.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("bad number in ensemble CSV: '" + cell + "'");
            }
            ++cols;
        }
        if (cols != d) throw ConfigError("ragged ensemble CSV row");
        ++e.n;
    }
    if (e.n == 0) throw ConfigError("ensemble CSV has no rows");
    return e;
}

}  // namespace rbmlab
