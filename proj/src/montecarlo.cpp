#include "cramer/montecarlo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

#include "cramer/diagnostics.hpp"
#include "cramer/errors.hpp"

namespace cramer {
namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// xoshiro256** seeded from (seed, path) so each path owns its stream
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path) {
        std::uint64_t sm = seed ^ (0xD1B54A32D192ED03ULL * (path + 1));
        sm = splitmix64(sm);
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = std::rotl(s_[3], 45);
        return result;
    }

    // uniform on (0, 1), never 0 or 1
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
    double exponential(double rate) { return -std::log(uniform()) / rate; }

private:
    std::uint64_t s_[4];
};

class SeveritySampler {
public:
    explicit SeveritySampler(const SeverityModel& m) {
        const auto& v = m.variant();
        if (const auto* e = std::get_if<Exponential>(&v)) {
            kind_ = Kind::exponential;
            rate_ = e->rate;
        } else if (const auto* g = std::get_if<Gamma>(&v)) {
            kind_ = Kind::gamma;
            shape_ = g->shape;
            scale_ = g->scale;
        } else if (const auto* p = std::get_if<PointMass>(&v)) {
            kind_ = Kind::point;
            location_ = p->location;
        } else if (const auto* mx = std::get_if<ExponentialMixture>(&v)) {
            kind_ = Kind::mixture;
            rates_ = mx->rates;
            cumulative_.resize(mx->weights.size());
            std::partial_sum(mx->weights.begin(), mx->weights.end(), cumulative_.begin());
            cumulative_.back() = 1.0;
        } else {
            const auto& l = std::get<LatticeSeverity>(v);
            kind_ = Kind::lattice;
            location_ = l.span;
            build_alias(l.masses);
        }
    }

    double operator()(PathRng& rng) const {
        switch (kind_) {
            case Kind::exponential:
                return rng.exponential(rate_);
            case Kind::gamma:
                return scale_ * boost::math::gamma_p_inv(shape_, rng.uniform());
            case Kind::point:
                return location_;
            case Kind::mixture: {
                const double u = rng.uniform();
                const auto i = static_cast<std::size_t>(
                    std::upper_bound(cumulative_.begin(), cumulative_.end() - 1, u) - cumulative_.begin());
                return rng.exponential(rates_[i]);
            }
            case Kind::lattice: {
                const double u = rng.uniform() * static_cast<double>(prob_.size());
                auto i = static_cast<std::size_t>(u);
                if (i >= prob_.size()) i = prob_.size() - 1;
                const double coin = rng.uniform();
                const std::size_t cell = coin < prob_[i] ? i : alias_[i];
                return location_ * static_cast<double>(cell + 1);
            }
        }
        return nan;
    }

private:
    enum class Kind { exponential, gamma, point, mixture, lattice };

    // Vose alias method
    void build_alias(const std::vector<double>& masses) {
        const std::size_t n = masses.size();
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        std::vector<double> scaled(n);
        std::vector<std::size_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = masses[i] * static_cast<double>(n);
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            const std::size_t s = small.back(), l = large.back();
            small.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = scaled[l] + scaled[s] - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (std::size_t i : large) prob_[i] = 1.0;
        for (std::size_t i : small) prob_[i] = 1.0;
    }

    Kind kind_{};
    double rate_ = 0.0, shape_ = 0.0, scale_ = 1.0, location_ = 0.0;
    std::vector<double> rates_, cumulative_, prob_;
    std::vector<std::size_t> alias_;
};

struct PathOutcome {
    double ruin_time = nan;
    double hitting_time = nan;
    double tail_hit = 0.0;
    double count = 0.0;
    double conditional_total = nan;
};

template <class OnJump>
PathOutcome run_path(const SimulationPlan& plan, const SeveritySampler& sampler, std::size_t index,
                     OnJump&& on_jump) {
    PathRng rng(plan.seed, index);
    const double lambda = plan.system.model().lambda();
    const double c = plan.system.premium();
    const double u = plan.system.capital();
    const double horizon = plan.horizon;

    PathOutcome out;
    bool tail_done = !plan.tail_time.has_value();
    bool cond_done = !plan.conditional_time.has_value();
    bool ruin_done = !(plan.ruin || !plan.ruin_by.empty() || plan.conditional_time);
    bool hit_done = !plan.hitting_below;

    double t = 0.0, s = 0.0;
    std::size_t n = 0;
    for (;;) {
        const double next = t + rng.exponential(lambda);
        // drift segment (t, min(next, horizon)]
        const double seg_end = std::min(next, horizon);
        if (!hit_done && s - c * seg_end <= -u) {
            const double cross = (s + u) / c;
            if (cross > t && cross <= seg_end) {
                out.hitting_time = cross;
                hit_done = true;
            }
        }
        if (!tail_done && next > *plan.tail_time) {
            out.tail_hit = s >= *plan.tail_time * plan.tail_level ? 1.0 : 0.0;
            out.count = static_cast<double>(n);
            tail_done = true;
        }
        if (!cond_done && next > *plan.conditional_time) {
            out.conditional_total = s;
            cond_done = true;
        }
        if (next > horizon) break;
        t = next;
        s += sampler(rng);
        ++n;
        on_jump(t, s);
        if (!ruin_done && s - c * t > u) {
            out.ruin_time = t;
            ruin_done = true;
        }
        if (ruin_done && hit_done && tail_done && cond_done) break;
    }
    return out;
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;  // sample variance, n - 1
    double m4 = 0.0;        // fourth central moment
    std::size_t n = 0;
};

Moments moments(const std::vector<double>& x) {
    Moments m;
    m.n = x.size();
    if (m.n == 0) return m;
    m.mean = pairwise_sum(x.data(), x.size()) / static_cast<double>(m.n);
    std::vector<double> d2(x.size()), d4(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - m.mean;
        d2[i] = d * d;
        d4[i] = d2[i] * d2[i];
    }
    if (m.n > 1) m.variance = pairwise_sum(d2.data(), d2.size()) / static_cast<double>(m.n - 1);
    m.m4 = pairwise_sum(d4.data(), d4.size()) / static_cast<double>(m.n);
    return m;
}

EstimateWithError mean_estimate(const std::vector<double>& x) {
    const auto m = moments(x);
    const double se = m.n > 0 ? std::sqrt(m.variance / static_cast<double>(m.n)) : nan;
    return {m.mean, se, m.n};
}

template <class Pred>
std::vector<double> indicators(const std::vector<PathOutcome>& paths, Pred pred) {
    std::vector<double> out(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) out[i] = pred(paths[i]) ? 1.0 : 0.0;
    return out;
}

void validate(const SimulationPlan& plan) {
    if (plan.n_paths < 1) throw DomainError("need at least one path");
    if (!(plan.horizon > 0.0) || !std::isfinite(plan.horizon)) throw DomainError("horizon must be positive");
    if (plan.tail_time && !(*plan.tail_time > 0.0 && *plan.tail_time <= plan.horizon))
        throw DomainError("tail time must lie in (0, horizon]");
    if (plan.conditional_time && !(*plan.conditional_time > 0.0 && *plan.conditional_time <= plan.horizon))
        throw DomainError("conditional time must lie in (0, horizon]");
    for (double s : plan.ruin_by)
        if (!(s > 0.0 && s <= plan.horizon)) throw DomainError("ruin-by times must lie in (0, horizon]");
    if (plan.hitting_below && !(plan.system.capital() > 0.0))
        throw DomainError("hitting below needs positive capital");
    const double events = plan.system.model().lambda() * plan.horizon * static_cast<double>(plan.n_paths);
    if (events > plan.event_budget) {
        std::ostringstream os;
        os << "expected event count " << events << " exceeds the budget " << plan.event_budget;
        throw BudgetError(os.str());
    }
}

std::vector<PathOutcome> run_all(const SimulationPlan& plan) {
    validate(plan);
    const SeveritySampler sampler(plan.system.model().severity());
    std::vector<PathOutcome> paths(plan.n_paths);
    unsigned workers = plan.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : plan.workers;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, plan.n_paths));
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) paths[i] = run_path(plan, sampler, i, [](double, double) {});
    };
    if (workers <= 1) {
        work(0, plan.n_paths);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (plan.n_paths + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk, end = std::min(plan.n_paths, begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
    }
    return paths;
}

}  // namespace

double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

SimulationResult simulate(const SimulationPlan& plan) {
    const auto paths = run_all(plan);
    SimulationResult res;
    res.n_paths = plan.n_paths;
    res.seed = plan.seed;
    const double horizon = plan.horizon;
    auto ruined_by = [](double s) {
        return [s](const PathOutcome& p) { return !std::isnan(p.ruin_time) && p.ruin_time <= s; };
    };

    if (plan.tail_time) {
        res.tail = mean_estimate(indicators(paths, [](const PathOutcome& p) { return p.tail_hit > 0.0; }));
        std::vector<double> counts(paths.size());
        for (std::size_t i = 0; i < paths.size(); ++i) counts[i] = paths[i].count;
        const auto m = moments(counts);
        const double n = static_cast<double>(m.n);
        res.claim_count_mean = EstimateWithError{m.mean, std::sqrt(m.variance / n), m.n};
        const double v4 = std::max(0.0, m.m4 - m.variance * m.variance);
        res.claim_count_variance = EstimateWithError{m.variance, std::sqrt(v4 / n), m.n};
    }
    if (plan.ruin) {
        res.ruin = mean_estimate(indicators(paths, ruined_by(horizon)));
        const auto& sys = plan.system;
        if (sys.loading_sign() > 0 && sys.capital() > 0.0) {
            const auto b = finite_time_bound(sys, sys.capital(), horizon / sys.capital());
            if (b.side == TimeSide::late) res.horizon_remainder_bound = b.bound;
        }
    }
    if (plan.hitting_below) {
        res.hitting_below = mean_estimate(indicators(paths, [horizon](const PathOutcome& p) {
            return !std::isnan(p.hitting_time) && p.hitting_time <= horizon;
        }));
    }
    for (double s : plan.ruin_by) res.ruin_by.emplace_back(s, mean_estimate(indicators(paths, ruined_by(s))));

    std::vector<double> times, totals;
    for (const auto& p : paths) {
        if (std::isnan(p.ruin_time)) continue;
        times.push_back(p.ruin_time);
        if (plan.conditional_time) totals.push_back(p.conditional_total);
    }
    if (plan.conditional_time && !totals.empty()) res.conditional_mean = mean_estimate(totals);
    if (!times.empty() && (plan.ruin || plan.keep_ruin_times)) {
        res.ruin_time_mean = mean_estimate(times);
        res.ruin_time_variance = moments(times).variance;
    }
    if (plan.keep_ruin_times) res.ruin_times = std::move(times);
    return res;
}

RuinTimeSummary ruin_time_samples(const SimulationPlan& plan) {
    const auto& sys = plan.system;
    if (sys.loading_sign() <= 0) throw LoadingError("ruin-time samples need positive safety loading");
    const auto sol = lundberg(sys);
    if (plan.horizon < 5.0 * sys.capital() * sol.tbar) throw DomainError("horizon must be at least 5 u tbar");
    SimulationPlan p = plan;
    p.ruin = true;
    p.keep_ruin_times = true;
    auto res = simulate(p);
    RuinTimeSummary out;
    out.frequency = *res.ruin;
    if (res.ruin_times.size() < 100)
        throw InsufficientRuinsError("fewer than 100 ruined paths", res.ruin_times.size());
    out.samples = std::move(res.ruin_times);
    out.mean = *res.ruin_time_mean;
    out.variance = *res.ruin_time_variance;
    out.pre_asymptotic = sol.R * sys.capital() < 1.0;
    if (out.pre_asymptotic) warn("R u < 1: ruin-time sample is pre-asymptotic; CLT comparisons are unreliable");
    return out;
}

PathTrace trace_path(const SimulationPlan& plan, std::size_t path) {
    validate(plan);
    if (path >= plan.n_paths) throw DomainError("path index out of range");
    const SeveritySampler sampler(plan.system.model().severity());
    PathTrace tr;
    const auto out = run_path(plan, sampler, path, [&](double t, double s) {
        tr.jump_times.push_back(t);
        tr.totals.push_back(s);
    });
    if (!std::isnan(out.ruin_time)) tr.ruin_time = out.ruin_time;
    if (!std::isnan(out.hitting_time)) tr.hitting_time = out.hitting_time;
    return tr;
}

}  // namespace cramer
