#include "rbmlab/chaos.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "rbmlab/errors.hpp"
#include "rbmlab/meanfield.hpp"
#include "rbmlab/wasserstein.hpp"

namespace rbmlab {

InfluenceState InfluenceState::initial(std::size_t n, std::size_t p) {
    if (p < 2 || n % p != 0) throw ConfigError("batch size p must be >= 2 and divide N");
    InfluenceState s;
    s.n = n;
    s.p = p;
    s.lists.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.lists[i] = {static_cast<std::uint32_t>(i)};
    s.clean.assign(n, 1);
    return s;
}

InfluenceState advance_influence(const InfluenceState& state, const Partition& partition) {
    if (partition.n != state.n || partition.p != state.p || !partition.valid())
        throw ConfigError("partition does not match influence state");
    InfluenceState next;
    next.n = state.n;
    next.p = state.p;
    next.k = state.k + 1;
    next.lists.resize(state.n);
    next.clean.assign(state.n, 0);
    std::vector<std::uint32_t> merged;
    for (std::size_t b = 0; b < partition.batches(); ++b) {
        const auto batch = partition.batch(b);
        merged.clear();
        bool all_clean = true;
        std::size_t total = 0;
        for (auto j : batch) {
            all_clean = all_clean && state.clean[j];
            total += state.lists[j].size();
            merged.insert(merged.end(), state.lists[j].begin(), state.lists[j].end());
        }
        std::sort(merged.begin(), merged.end());
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        // Lists are pairwise disjoint iff no element was removed by the union.
        const bool disjoint = merged.size() == total;
        for (auto i : batch) {
            next.lists[i] = merged;
            next.clean[i] = static_cast<char>(all_clean && disjoint);
        }
    }
    return next;
}

std::vector<Partition> enumerate_partitions(std::size_t n, std::size_t p) {
    if (p < 2 || n % p != 0) throw ConfigError("batch size p must be >= 2 and divide N");
    if (n > 24) throw SizeError("partition enumeration limited to N <= 24");
    std::vector<Partition> out;
    std::vector<std::uint32_t> current;
    // Each new batch starts with the smallest unused index, which yields canonical order.
    auto rec = [&](auto&& self, std::uint32_t used) -> void {
        if (std::popcount(used) == static_cast<int>(n)) {
            out.push_back(Partition{n, p, current});
            return;
        }
        const auto first = static_cast<std::uint32_t>(std::countr_one(used));
        current.push_back(first);
        auto choose = [&](auto&& pick, std::uint32_t from, std::size_t need, std::uint32_t mask) -> void {
            if (need == 0) {
                self(self, mask);
                return;
            }
            for (std::uint32_t c = from; c < n; ++c) {
                if (mask & (1u << c)) continue;
                current.push_back(c);
                pick(pick, c + 1, need - 1, mask | (1u << c));
                current.pop_back();
            }
        };
        choose(choose, first + 1, p - 1, used | (1u << first));
        current.pop_back();
    };
    rec(rec, 0u);
    return out;
}

CleanReport epsilon_exact(std::size_t n, std::size_t p, std::size_t k) {
    if (p < 2 || n % p != 0) throw ConfigError("batch size p must be >= 2 and divide N");
    CleanReport rep{n, p, k, 0.0, 0.0, CleanMethod::exact, 0};
    if (k <= 1) return rep;
    if (n > 24) throw SizeError("exact enumeration limited to N <= 24");
    // Partition count, then count^k sequences.
    double count = 1.0;
    for (std::size_t b = 0; b < n / p; ++b) {
        double ways = 1.0;
        for (std::size_t j = 1; j < p; ++j)
            ways = ways * static_cast<double>(n - b * p - j) / static_cast<double>(j);
        count *= ways;
    }
    if (std::pow(count, static_cast<double>(k)) > static_cast<double>(kExactSequenceCap))
        throw SizeError("exact enumeration exceeds 1e7 partition sequences");
    const auto parts = enumerate_partitions(n, p);
    // Bitmask lists: lists[i] is the set L_i as bits.
    struct State {
        std::vector<std::uint32_t> lists;
        std::uint32_t clean;
    };
    State s0{std::vector<std::uint32_t>(n), (n == 32 ? ~0u : ((1u << n) - 1u))};
    for (std::size_t i = 0; i < n; ++i) s0.lists[i] = 1u << i;
    std::uint64_t unclean = 0, total = 0;
    auto rec = [&](auto&& self, const State& s, std::size_t depth) -> void {
        if (depth == k) {
            ++total;
            if (!(s.clean & 1u)) ++unclean;
            return;
        }
        for (const auto& part : parts) {
            State nx{std::vector<std::uint32_t>(n), 0u};
            for (std::size_t b = 0; b < part.batches(); ++b) {
                std::uint32_t u = 0;
                int sz = 0;
                bool ok = true;
                for (auto j : part.batch(b)) {
                    u |= s.lists[j];
                    sz += std::popcount(s.lists[j]);
                    ok = ok && ((s.clean >> j) & 1u);
                }
                ok = ok && std::popcount(u) == sz;
                for (auto j : part.batch(b)) {
                    nx.lists[j] = u;
                    if (ok) nx.clean |= 1u << j;
                }
            }
            self(self, nx, depth + 1);
        }
    };
    rec(rec, s0, 0);
    rep.epsilon = static_cast<double>(unclean) / static_cast<double>(total);
    rep.replicates = total;
    return rep;
}

namespace {

/// One replicate: lazily sampled batches for steps 0..k-1, touched only where particle
/// 0's ancestry needs them.
class LazyCone {
public:
    LazyCone(std::size_t n, std::size_t p, std::size_t k, const NoiseStream& stream,
             std::uint64_t replicate)
        : n_(n), p_(p), steps_(k) {
        const auto lo = static_cast<std::uint32_t>(replicate);
        const auto hi = static_cast<std::uint32_t>(replicate >> 32);
        for (std::size_t s = 0; s < k; ++s)
            steps_[s].rng.emplace(stream, NoiseKey{lo, 0, static_cast<std::uint32_t>(s), hi});
    }

    bool particle0_clean(std::size_t k) {
        std::vector<std::uint32_t> list;
        return clean(0, k, list);
    }

private:
    struct Step {
        std::unordered_map<std::uint32_t, std::uint32_t> batch_of;
        std::vector<std::vector<std::uint32_t>> batches;
        std::optional<CounterRng> rng;
    };

    const std::vector<std::uint32_t>& batch(std::uint32_t i, std::size_t s) {
        Step& st = steps_[s];
        if (auto it = st.batch_of.find(i); it != st.batch_of.end()) return st.batches[it->second];
        std::vector<std::uint32_t> b{i};
        while (b.size() < p_) {
            const auto c = static_cast<std::uint32_t>(st.rng->below(n_));
            if (st.batch_of.count(c) || std::find(b.begin(), b.end(), c) != b.end()) continue;
            b.push_back(c);
        }
        std::sort(b.begin(), b.end());
        const auto id = static_cast<std::uint32_t>(st.batches.size());
        for (auto j : b) st.batch_of.emplace(j, id);
        st.batches.push_back(std::move(b));
        return st.batches.back();
    }

    bool clean(std::uint32_t i, std::size_t k, std::vector<std::uint32_t>& list) {
        if (k == 0) {
            list = {i};
            return true;
        }
        const auto key = (static_cast<std::uint64_t>(k) << 32) | i;
        if (auto it = memo_.find(key); it != memo_.end()) {
            list = it->second.first;
            return it->second.second;
        }
        const std::vector<std::uint32_t> mates = batch(i, k - 1);
        std::vector<std::uint32_t> merged, sub;
        bool ok = true;
        std::size_t total = 0;
        for (auto j : mates) {
            ok = clean(j, k - 1, sub) && ok;
            total += sub.size();
            merged.insert(merged.end(), sub.begin(), sub.end());
        }
        std::sort(merged.begin(), merged.end());
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        ok = ok && merged.size() == total;
        list = merged;
        for (auto j : mates) memo_[(static_cast<std::uint64_t>(k) << 32) | j] = {merged, ok};
        return ok;
    }

    std::size_t n_, p_;
    std::vector<Step> steps_;
    std::unordered_map<std::uint64_t, std::pair<std::vector<std::uint32_t>, bool>> memo_;
};

}  // namespace

CleanReport epsilon_mc(std::size_t n, std::size_t p, std::size_t k, std::size_t replicates,
                       std::uint64_t seed, Exec exec) {
    if (p < 2 || n % p != 0) throw ConfigError("batch size p must be >= 2 and divide N");
    if (replicates == 0) throw ConfigError("replicates must be >= 1");
    if (std::pow(static_cast<double>(p), static_cast<double>(k)) > static_cast<double>(kInfluenceListCap))
        throw SizeError("p^k exceeds the influence-list cap of 1e6");
    CleanReport rep{n, p, k, 0.0, 0.0, CleanMethod::monte_carlo, replicates};
    if (k <= 1) return rep;
    const NoiseStream stream(seed, Purpose::partition);
    std::mutex guard;
    std::size_t unclean = 0;
    parallel_for(replicates, exec, [&](std::size_t lo, std::size_t hi) {
        std::size_t local = 0;
        for (std::size_t r = lo; r < hi; ++r) {
            LazyCone cone(n, p, k, stream, r);
            if (!cone.particle0_clean(k)) ++local;
        }
        std::lock_guard lock(guard);
        unclean += local;
    });
    const double e = static_cast<double>(unclean) / static_cast<double>(replicates);
    rep.epsilon = e;
    rep.standard_error = std::sqrt(e * (1.0 - e) / static_cast<double>(replicates));
    return rep;
}

ChaosExperiment theorem34_experiment(const ModelSpec& model, const InitialLaw& law, std::size_t n,
                                     std::size_t p, double tau, std::size_t k, std::size_t m,
                                     std::uint64_t seed, std::size_t n_substeps, Exec exec) {
    if (model.dimension() != 1) throw DimensionError("exact W_1 needs d = 1");
    if (m < p) throw ConfigError("need at least p samples");
    if (p < 2 || n % p != 0) throw ConfigError("batch size p must be >= 2 and divide N");
    std::vector<double> rbm_samples(m);
    const NoiseStream noise(seed, Purpose::brownian);
    parallel_for(m, exec, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            const auto rep = static_cast<std::uint32_t>(r);
            Ensemble e = init_iid(law, n, seed, 1, rep);
            for (std::size_t s = 0; s < k; ++s) {
                const auto step = static_cast<std::uint32_t>(s);
                const auto part = random_partition(n, p, noise, step, rep);
                e = rbm_step(e, part, model, tau, n_substeps, noise, step, rep);
            }
            rbm_samples[r] = e.x[0];
        }
    });
    MeanFieldConfig cfg;
    cfg.p = p;
    cfg.tau = tau;
    cfg.n_substeps = n_substeps;
    const std::uint64_t mf_seed = mix64(seed ^ 0x5A5A5A5A5A5A5A5Aull);
    MeanFieldEnsemble mf = make_meanfield(law, m, cfg, mf_seed);
    const NoiseStream mf_noise(mf_seed, Purpose::brownian);
    for (std::size_t s = 0; s < k; ++s) mf = ginf_step(mf, model, mf_noise, exec);
    ChaosExperiment out;
    out.samples = m;
    out.w1 = w_q_samples(rbm_samples, mf.y, 1.0);
    const auto eps = epsilon_mc(n, p, k, std::max<std::size_t>(m, 10000), seed, exec);
    out.epsilon = eps.epsilon;
    out.epsilon_se = eps.standard_error;
    out.bound_ratio = eps.epsilon > 0.0 ? out.w1 / eps.epsilon
                                        : std::numeric_limits<double>::infinity();
    return out;
}

void write_clean_csv(std::ostream& os, const std::vector<CleanReport>& rows) {
    os << "N,p,k,epsilon,stderr,method,replicates\n";
    for (const auto& r : rows)
        os << r.n << ',' << r.p << ',' << r.k << ',' << r.epsilon << ',' << r.standard_error << ','
           << (r.method == CleanMethod::exact ? "exact" : "monte_carlo") << ',' << r.replicates
           << '\n';
}

}  // namespace rbmlab
