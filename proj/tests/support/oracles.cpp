#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

namespace atpo::testing {

std::vector<double> random_simplex(Rng& rng, std::size_t n, double zero_fraction) {
    std::vector<double> p(n);
    double sum = 0.0;
    for (auto& v : p) {
        v = rng.uniform() < zero_fraction ? 0.0 : rng.uniform() + 0.05;
        sum += v;
    }
    if (sum == 0.0) {
        p[rng.below(n)] = 1.0;
        return p;
    }
    for (auto& v : p) v /= sum;
    return p;
}

TabularPOMDP random_pomdp(Rng& rng, std::size_t nx, std::size_t na, std::size_t nz, double discount) {
    std::vector<double> t, o, r;
    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t x = 0; x < nx; ++x) {
            const auto row = random_simplex(rng, nx);
            t.insert(t.end(), row.begin(), row.end());
        }
    }
    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t x = 0; x < nx; ++x) {
            const auto row = random_simplex(rng, nz);
            o.insert(o.end(), row.begin(), row.end());
        }
    }
    for (std::size_t i = 0; i < nx * na; ++i) r.push_back(2.0 * rng.uniform() - 1.0);
    TabularMDP base(StochasticKernel::from_dense(na, nx, nx, t), std::move(r), discount);
    return TabularPOMDP(std::move(base), StochasticKernel::from_dense(na, nx, nz, o),
                        Belief(random_simplex(rng, nx, 0.2)));
}

Enumerated enumerate_history(const TabularPOMDP& pomdp, const History& history) {
    const std::size_t nx = pomdp.num_states();
    const auto& T = pomdp.base().transition();
    const auto& O = pomdp.observation();
    Enumerated out;
    out.joint.assign(nx, 0.0);
    std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t t, std::size_t x, double w) {
        if (t == history.size()) {
            out.joint[x] += w;
            return;
        }
        const auto [a, z] = history[t];
        for (std::size_t y = 0; y < nx; ++y) {
            const double step = T.at(a, x, y) * O.at(a, y, z);
            if (step > 0.0) walk(t + 1, y, w * step);
        }
    };
    const auto& b0 = pomdp.initial_belief().probs();
    for (std::size_t x = 0; x < nx; ++x) {
        if (b0[x] > 0.0) walk(0, x, b0[x]);
    }
    for (double v : out.joint) out.evidence += v;
    return out;
}

History sample_history(const TabularPOMDP& pomdp, std::size_t length, Rng& rng) {
    const auto& T = pomdp.base().transition();
    const auto& O = pomdp.observation();
    std::size_t x = rng.categorical(pomdp.initial_belief().probs());
    History h;
    for (std::size_t t = 0; t < length; ++t) {
        const std::size_t a = rng.below(pomdp.num_actions());
        std::vector<double> row(pomdp.num_states());
        for (std::size_t y = 0; y < row.size(); ++y) row[y] = T.at(a, x, y);
        x = rng.categorical(row);
        std::vector<double> orow(pomdp.num_observations());
        for (std::size_t z = 0; z < orow.size(); ++z) orow[z] = O.at(a, x, z);
        h.emplace_back(a, rng.categorical(orow));
    }
    return h;
}

TaskLibrary random_library(Rng& rng, std::size_t k, std::size_t max_states, std::size_t na, std::size_t nz) {
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t nx = 2 + rng.below(max_states - 1);
        auto pomdp = random_pomdp(rng, nx, na, nz);
        AlphaVectorPolicy policy({{std::vector<double>(nx, 0.0), 0}});
        tasks.push_back({std::move(pomdp), std::move(policy), "task" + std::to_string(i)});
    }
    return TaskLibrary(std::move(tasks));
}

std::vector<double> task_posterior_oracle(const TaskLibrary& library, std::span<const double> prior,
                                          const History& history) {
    std::vector<double> post(library.size());
    double total = 0.0;
    for (std::size_t k = 0; k < library.size(); ++k) {
        post[k] = prior[k] * enumerate_history(library[k].pomdp, history).evidence;
        total += post[k];
    }
    for (double& p : post) p /= total;
    return post;
}

double expectimax_q(const TabularPOMDP& m, const AlphaVectorPolicy& p, const Belief& b, std::size_t a) {
    const std::size_t nx = m.num_states();
    double q = 0.0;
    for (std::size_t x = 0; x < nx; ++x) q += b[x] * m.base().reward(x, a);
    for (std::size_t z = 0; z < m.num_observations(); ++z) {
        std::vector<double> mass(nx, 0.0);
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < nx; ++y)
                mass[y] += b[x] * m.base().transition().at(a, x, y) * m.observation().at(a, y, z);
        const double rho = std::accumulate(mass.begin(), mass.end(), 0.0);
        if (rho == 0.0) continue;
        double best = -INFINITY;
        for (std::size_t i = 0; i < p.size(); ++i) {
            double dot = 0.0;
            for (std::size_t y = 0; y < nx; ++y) dot += p.alpha(i)[y] * mass[y];
            best = std::max(best, dot);
        }
        q += m.discount() * best;
    }
    return q;
}

double chi_squared_p(double statistic, std::size_t dof) {
    if (dof == 0) return 1.0;
    boost::math::chi_squared dist(static_cast<double>(dof));
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

ChiSquared chi_squared(const std::vector<std::size_t>& counts, const std::vector<double>& probs) {
    ChiSquared out;
    double n = 0.0;
    for (std::size_t c : counts) n += static_cast<double>(c);
    std::vector<std::pair<double, double>> bins;  // observed, expected
    double pooled_obs = 0.0, pooled_exp = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = probs[i] * n;
        if (probs[i] == 0.0) {
            if (counts[i] > 0) out.support_ok = false;
            continue;
        }
        if (e >= 5.0) {
            bins.emplace_back(static_cast<double>(counts[i]), e);
        } else {
            pooled_obs += static_cast<double>(counts[i]);
            pooled_exp += e;
        }
    }
    if (pooled_exp > 0.0) {
        if (pooled_exp >= 5.0 || bins.empty()) {
            bins.emplace_back(pooled_obs, pooled_exp);
        } else {
            bins.back().first += pooled_obs;
            bins.back().second += pooled_exp;
        }
    }
    if (bins.size() < 2) return out;
    for (const auto& [o, e] : bins) out.statistic += (o - e) * (o - e) / e;
    out.dof = bins.size() - 1;
    out.p_value = chi_squared_p(out.statistic, out.dof);
    return out;
}

std::vector<double> finite_horizon_values(const TabularMDP& mdp, std::size_t horizon) {
    const std::size_t nx = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    std::vector<double> v(nx, 0.0), next(nx);
    for (std::size_t h = 0; h < horizon; ++h) {
        for (std::size_t x = 0; x < nx; ++x) {
            double best = -INFINITY;
            for (std::size_t a = 0; a < na; ++a) {
                double q = mdp.reward(x, a);
                for (std::size_t y = 0; y < nx; ++y) q += mdp.discount() * mdp.transition().at(a, x, y) * v[y];
                best = std::max(best, q);
            }
            next[x] = best;
        }
        v.swap(next);
    }
    return v;
}

int bfs_grid_distance(int width, int height, bool torus, std::pair<int, int> from, std::pair<int, int> to,
                      std::optional<std::pair<int, int>> blocked) {
    std::map<std::pair<int, int>, int> dist{{from, 0}};
    std::deque<std::pair<int, int>> queue{from};
    const std::array<std::pair<int, int>, 4> steps{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}}};
    while (!queue.empty()) {
        const auto c = queue.front();
        queue.pop_front();
        if (c == to) return dist[c];
        for (const auto& [dx, dy] : steps) {
            int x = c.first + dx, y = c.second + dy;
            if (torus) {
                x = (x + width) % width;
                y = (y + height) % height;
            } else if (x < 0 || y < 0 || x >= width || y >= height) {
                continue;
            }
            const std::pair<int, int> n{x, y};
            if (blocked && n == *blocked) continue;
            if (dist.count(n)) continue;
            dist[n] = dist[c] + 1;
            queue.push_back(n);
        }
    }
    return -1;
}

int night_pursuit_bfs(int width, int height, std::pair<int, int> prey0, std::pair<int, int> prey1,
                      std::pair<int, int> ad_hoc, std::pair<int, int> teammate) {
    using P = std::pair<int, int>;
    auto manhattan = [](P a, P b) { return std::abs(a.first - b.first) + std::abs(a.second - b.second); };
    auto teammate_step = [&](P t) {
        const P goal = manhattan(t, prey1) < manhattan(t, prey0) ? prey1 : prey0;
        const int dx = goal.first - t.first, dy = goal.second - t.second;
        if (dx == 0 && dy == 0) return t;
        if (std::abs(dx) >= std::abs(dy)) return P{t.first + (dx > 0 ? 1 : -1), t.second};
        return P{t.first, t.second + (dy > 0 ? 1 : -1)};
    };
    auto captured = [&](P a, P t) { return (a == prey0 && t == prey1) || (a == prey1 && t == prey0); };
    const std::array<P, 5> moves{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}, {0, 0}}};
    std::set<std::pair<P, P>> seen{{ad_hoc, teammate}};
    std::deque<std::pair<std::pair<P, P>, int>> queue{{{ad_hoc, teammate}, 0}};
    while (!queue.empty()) {
        const auto [s, d] = queue.front();
        queue.pop_front();
        if (captured(s.first, s.second)) return d;
        const P t2 = teammate_step(s.second);
        for (const auto& [dx, dy] : moves) {
            P a2{s.first.first + dx, s.first.second + dy};
            if (a2.first < 0 || a2.second < 0 || a2.first >= width || a2.second >= height) a2 = s.first;
            if (seen.insert({a2, t2}).second) queue.push_back({{a2, t2}, d + 1});
        }
    }
    return -1;
}

}  // namespace atpo::testing
