#include "atpo/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "atpo/rng.hpp"

namespace atpo {

Belief::Belief(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ModelError("belief over zero states");
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ModelError("belief entry is negative or not finite");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
        throw ModelError("belief sums to " + std::to_string(sum));
    }
}

Belief Belief::point(std::size_t num_states, std::size_t state) {
    if (state >= num_states) throw ModelError("point belief outside the state space");
    std::vector<double> p(num_states, 0.0);
    p[state] = 1.0;
    return Belief(std::move(p));
}

Belief Belief::uniform(std::size_t num_states) {
    return Belief(std::vector<double>(num_states, 1.0 / static_cast<double>(num_states)));
}

Belief Belief::uniform_over(std::size_t num_states, std::span<const std::size_t> support) {
    if (support.empty()) throw ModelError("empty belief support");
    std::vector<double> p(num_states, 0.0);
    const double w = 1.0 / static_cast<double>(support.size());
    for (std::size_t x : support) {
        if (x >= num_states) throw ModelError("belief support outside the state space");
        p[x] = w;
    }
    return Belief(std::move(p));
}

std::size_t Belief::most_likely() const {
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

TabularPOMDP::TabularPOMDP(TabularMDP base, StochasticKernel observation, Belief initial_belief)
    : base_(std::move(base)), observation_(std::move(observation)), initial_belief_(std::move(initial_belief)) {
    if (observation_.num_actions() != base_.num_actions() || observation_.num_rows() != base_.num_states()) {
        throw ModelError("observation kernel shape does not match the MDP");
    }
    if (observation_.num_cols() == 0) throw ModelError("empty observation alphabet");
    if (!observation_.entries_valid()) throw ModelError("observation kernel has invalid entries");
    const double err = observation_.max_row_sum_error();
    if (err > kProbabilityTolerance) {
        throw ModelError("observation kernel is not row-stochastic (max error " + std::to_string(err) + ")");
    }
    if (initial_belief_.size() != base_.num_states()) throw ModelError("initial belief has wrong size");
}

bool TabularPOMDP::has_identity_observations() const {
    if (num_observations() != num_states()) return false;
    for (std::size_t a = 0; a < num_actions(); ++a) {
        for (std::size_t y = 0; y < num_states(); ++y) {
            const auto row = observation_.row(a, y);
            if (row.size() != 1 || row.front().col != y || row.front().prob != 1.0) return false;
        }
    }
    return true;
}

FilterResult belief_update(const TabularPOMDP& pomdp, const Belief& b, std::size_t action, std::size_t observation) {
    if (b.size() != pomdp.num_states()) throw ModelError("belief size does not match the model");
    if (action >= pomdp.num_actions() || observation >= pomdp.num_observations()) {
        throw ModelError("action or observation out of range");
    }
    const auto& T = pomdp.base().transition();
    const auto& O = pomdp.observation();
    std::vector<double> next(pomdp.num_states(), 0.0);
    for (std::size_t x = 0; x < b.size(); ++x) {
        const double bx = b[x];
        if (bx == 0.0) continue;
        for (const auto& e : T.row(action, x)) next[e.col] += bx * e.prob;
    }
    double rho = 0.0;
    for (std::size_t y = 0; y < next.size(); ++y) {
        if (next[y] == 0.0) continue;
        next[y] *= O.at(action, y, observation);
        rho += next[y];
    }
    FilterResult out;
    out.likelihood = rho;
    if (rho > 0.0) {
        for (double& p : next) p /= rho;
        out.belief = Belief(std::move(next));
    }
    return out;
}

AlphaVectorPolicy::AlphaVectorPolicy(std::vector<AlphaVector> vectors) {
    if (vectors.empty()) throw ModelError("alpha-vector policy must be non-empty");
    num_states_ = vectors.front().values.size();
    if (num_states_ == 0) throw ModelError("alpha vectors over zero states");
    data_.reserve(vectors.size() * num_states_);
    for (auto& v : vectors) {
        if (v.values.size() != num_states_) throw ModelError("alpha vectors disagree in length");
        data_.insert(data_.end(), v.values.begin(), v.values.end());
        actions_.push_back(v.action);
    }
}

std::vector<AlphaVector> AlphaVectorPolicy::vectors() const {
    std::vector<AlphaVector> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
        const auto a = alpha(i);
        out.push_back({{a.begin(), a.end()}, actions_[i]});
    }
    return out;
}

std::pair<std::size_t, double> AlphaVectorPolicy::best(std::span<const std::size_t> support,
                                                       std::span<const double> weights) const {
    std::size_t best_index = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i) {
        const double* row = data_.data() + i * num_states_;
        double dot = 0.0;
        for (std::size_t s = 0; s < support.size(); ++s) dot += row[support[s]] * weights[s];
        if (dot > best_value) {
            best_value = dot;
            best_index = i;
        }
    }
    return {best_index, best_value};
}

double AlphaVectorPolicy::value(std::span<const double> b) const {
    if (b.size() != num_states_) throw ModelError("belief size does not match the alpha vectors");
    const auto sparse = detail::support_of(b);
    return best(sparse.index, sparse.value).second;
}

double value_of(const AlphaVectorPolicy& policy, const Belief& b) { return policy.value(b.probs()); }

namespace detail {

SparseVector support_of(std::span<const double> b) {
    SparseVector out;
    for (std::size_t x = 0; x < b.size(); ++x) {
        if (b[x] != 0.0) {
            out.index.push_back(x);
            out.value.push_back(b[x]);
        }
    }
    return out;
}

std::vector<ObservationBranch> branches(const TabularPOMDP& pomdp, const SparseVector& b, std::size_t action) {
    const auto& T = pomdp.base().transition();
    const auto& O = pomdp.observation();

    // Predicted next-state mass, collected sparsely.
    std::vector<std::pair<std::size_t, double>> predicted;
    for (std::size_t s = 0; s < b.index.size(); ++s) {
        for (const auto& e : T.row(action, b.index[s])) predicted.emplace_back(e.col, b.value[s] * e.prob);
    }
    std::sort(predicted.begin(), predicted.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });

    struct Triplet {
        std::size_t z;
        std::size_t y;
        double w;
    };
    std::vector<Triplet> triplets;
    for (std::size_t i = 0; i < predicted.size();) {
        const std::size_t y = predicted[i].first;
        double mass = 0.0;
        for (; i < predicted.size() && predicted[i].first == y; ++i) mass += predicted[i].second;
        if (mass == 0.0) continue;
        for (const auto& o : O.row(action, y)) triplets.push_back({o.col, y, mass * o.prob});
    }
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& l, const Triplet& r) { return l.z < r.z; });

    std::vector<ObservationBranch> out;
    for (std::size_t i = 0; i < triplets.size();) {
        ObservationBranch branch;
        branch.observation = triplets[i].z;
        for (; i < triplets.size() && triplets[i].z == branch.observation; ++i) {
            if (triplets[i].w == 0.0) continue;
            branch.mass.index.push_back(triplets[i].y);
            branch.mass.value.push_back(triplets[i].w);
            branch.likelihood += triplets[i].w;
        }
        if (branch.likelihood > 0.0) out.push_back(std::move(branch));
    }
    return out;
}

}  // namespace detail

namespace {

double expected_reward(const TabularMDP& mdp, const detail::SparseVector& b, std::size_t action) {
    double r = 0.0;
    for (std::size_t s = 0; s < b.index.size(); ++s) r += b.value[s] * mdp.reward(b.index[s], action);
    return r;
}

double q_value_sparse(const TabularPOMDP& pomdp, const AlphaVectorPolicy& policy, const detail::SparseVector& b,
                      std::size_t action) {
    double future = 0.0;
    // rho_z * v(Bel(b,a,z)) equals the best inner product with the unnormalized successor.
    for (const auto& branch : detail::branches(pomdp, b, action)) {
        future += policy.best(branch.mass.index, branch.mass.value).second;
    }
    return expected_reward(pomdp.base(), b, action) + pomdp.discount() * future;
}

void check_query(const TabularPOMDP& pomdp, const AlphaVectorPolicy& policy, const Belief& b) {
    if (b.size() != pomdp.num_states() || policy.num_states() != pomdp.num_states()) {
        throw ModelError("belief, policy and model disagree in state count");
    }
}

}  // namespace

double q_value(const TabularPOMDP& pomdp, const AlphaVectorPolicy& policy, const Belief& b, std::size_t action) {
    check_query(pomdp, policy, b);
    if (action >= pomdp.num_actions()) throw ModelError("action out of range");
    return q_value_sparse(pomdp, policy, detail::support_of(b.probs()), action);
}

std::vector<double> q_values(const TabularPOMDP& pomdp, const AlphaVectorPolicy& policy, const Belief& b) {
    check_query(pomdp, policy, b);
    const auto sparse = detail::support_of(b.probs());
    std::vector<double> q(pomdp.num_actions());
    for (std::size_t a = 0; a < q.size(); ++a) q[a] = q_value_sparse(pomdp, policy, sparse, a);
    return q;
}

std::vector<double> greedy_belief_policy(const TabularPOMDP& pomdp, const AlphaVectorPolicy& policy,
                                         const Belief& b) {
    const auto q = q_values(pomdp, policy, b);
    const auto best = argmax_set(q);
    std::vector<double> dist(q.size(), 0.0);
    const double w = 1.0 / static_cast<double>(best.size());
    for (std::size_t a : best) dist[a] = w;
    return dist;
}

std::size_t default_belief_count(std::size_t num_states) {
    const double n = std::ceil(10.0 * std::sqrt(static_cast<double>(num_states)));
    return std::min<std::size_t>(2000, std::max<std::size_t>(1, static_cast<std::size_t>(n)));
}

std::vector<Belief> sample_belief_set(const TabularPOMDP& pomdp, std::size_t n, std::uint64_t seed,
                                      std::size_t trajectory_length) {
    if (n == 0) throw ModelError("belief set size must be at least 1");
    Rng rng(seed);
    const auto& T = pomdp.base().transition();
    const auto& O = pomdp.observation();
    std::vector<Belief> out{pomdp.initial_belief()};
    std::vector<double> weights;
    auto sample_row = [&](std::span<const KernelEntry> row) {
        weights.clear();
        for (const auto& e : row) weights.push_back(e.prob);
        return row[rng.categorical(weights)].col;
    };
    while (out.size() < n) {
        std::size_t x = rng.categorical(pomdp.initial_belief().probs());
        Belief b = pomdp.initial_belief();
        for (std::size_t step = 0; step < trajectory_length && out.size() < n; ++step) {
            const std::size_t a = rng.below(pomdp.num_actions());
            const std::size_t y = sample_row(T.row(a, x));
            const std::size_t z = sample_row(O.row(a, y));
            auto filtered = belief_update(pomdp, b, a, z);
            if (!filtered.possible()) break;  // only reachable through round-off
            b = std::move(*filtered.belief);
            out.push_back(b);
            x = y;
        }
    }
    return out;
}

std::vector<Belief> reachable_point_beliefs(const TabularPOMDP& pomdp) {
    const std::size_t nx = pomdp.num_states();
    std::vector<char> seen(nx, 0);
    std::vector<std::size_t> frontier;
    for (std::size_t x = 0; x < nx; ++x) {
        if (pomdp.initial_belief()[x] > 0.0) {
            seen[x] = 1;
            frontier.push_back(x);
        }
    }
    for (std::size_t head = 0; head < frontier.size(); ++head) {
        const std::size_t x = frontier[head];
        for (std::size_t a = 0; a < pomdp.num_actions(); ++a) {
            for (const auto& e : pomdp.base().transition().row(a, x)) {
                if (!seen[e.col]) {
                    seen[e.col] = 1;
                    frontier.push_back(e.col);
                }
            }
        }
    }
    std::sort(frontier.begin(), frontier.end());
    std::vector<Belief> out;
    out.reserve(frontier.size());
    for (std::size_t x : frontier) out.push_back(Belief::point(nx, x));
    return out;
}

namespace {

/// Point-based backup of the value function at one belief.
AlphaVector backup(const TabularPOMDP& pomdp, const AlphaVectorPolicy& current, const detail::SparseVector& b) {
    const auto& mdp = pomdp.base();
    const auto& T = mdp.transition();
    const auto& O = pomdp.observation();
    const std::size_t nx = pomdp.num_states();
    const std::size_t fallback = current.best(b.index, b.value).first;

    std::vector<std::size_t> choice(pomdp.num_observations());
    std::vector<double> next_value(nx);
    AlphaVector best_vector;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<double> candidate(nx);

    for (std::size_t a = 0; a < pomdp.num_actions(); ++a) {
        std::fill(choice.begin(), choice.end(), fallback);
        for (const auto& branch : detail::branches(pomdp, b, a)) {
            choice[branch.observation] = current.best(branch.mass.index, branch.mass.value).first;
        }
        // next_value[y] = sum_z O(z|y,a) alpha_{choice(z)}(y)
        for (std::size_t y = 0; y < nx; ++y) {
            double v = 0.0;
            for (const auto& o : O.row(a, y)) v += o.prob * current.alpha(choice[o.col])[y];
            next_value[y] = v;
        }
        for (std::size_t x = 0; x < nx; ++x) {
            double future = 0.0;
            for (const auto& e : T.row(a, x)) future += e.prob * next_value[e.col];
            candidate[x] = mdp.reward(x, a) + mdp.discount() * future;
        }
        double at_b = 0.0;
        for (std::size_t s = 0; s < b.index.size(); ++s) at_b += candidate[b.index[s]] * b.value[s];
        if (at_b > best_value) {
            best_value = at_b;
            best_vector.values = candidate;
            best_vector.action = a;
        }
    }
    return best_vector;
}

double dot(std::span<const double> alpha, const detail::SparseVector& b) {
    double v = 0.0;
    for (std::size_t s = 0; s < b.index.size(); ++s) v += alpha[b.index[s]] * b.value[s];
    return v;
}

/// Removes exact duplicates and pointwise-dominated vectors.
std::vector<AlphaVector> prune(std::vector<AlphaVector> vectors) {
    std::vector<AlphaVector> unique;
    for (auto& v : vectors) {
        const bool dup = std::any_of(unique.begin(), unique.end(),
                                     [&](const AlphaVector& u) { return u.values == v.values; });
        if (!dup) unique.push_back(std::move(v));
    }
    const std::size_t n = unique.size();
    std::vector<char> removed(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n && !removed[i]; ++j) {
            if (i == j || removed[j]) continue;
            const auto& lo = unique[i].values;
            const auto& hi = unique[j].values;
            bool dominated = true;
            for (std::size_t x = 0; x < lo.size(); ++x) {
                if (hi[x] < lo[x]) {
                    dominated = false;
                    break;
                }
            }
            if (dominated) removed[i] = 1;
        }
    }
    std::vector<AlphaVector> kept;
    for (std::size_t i = 0; i < n; ++i) {
        if (!removed[i]) kept.push_back(std::move(unique[i]));
    }
    return kept;
}

}  // namespace

PerseusResult perseus_solve(const TabularPOMDP& pomdp, std::span<const Belief> beliefs, const PerseusOptions& options) {
    if (beliefs.empty()) throw ModelError("perseus_solve needs at least one belief");
    const std::size_t nx = pomdp.num_states();
    std::vector<detail::SparseVector> points;
    points.reserve(beliefs.size());
    for (const auto& b : beliefs) {
        if (b.size() != nx) throw ModelError("belief size does not match the model");
        points.push_back(detail::support_of(b.probs()));
    }

    const auto& rewards = pomdp.base().rewards();
    const double r_min = *std::min_element(rewards.begin(), rewards.end());
    AlphaVectorPolicy current({AlphaVector{std::vector<double>(nx, r_min / (1.0 - pomdp.discount())), 0}});

    auto values_under = [&](const AlphaVectorPolicy& policy) {
        std::vector<double> v(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) v[i] = policy.best(points[i].index, points[i].value).second;
        return v;
    };

    PerseusResult result{current, {values_under(current)}, false};
    Rng rng(options.seed);

    for (std::size_t round = 0; round < options.max_rounds; ++round) {
        const std::vector<double>& old_values = result.round_values.back();
        std::vector<double> new_values(points.size(), -std::numeric_limits<double>::infinity());
        std::vector<AlphaVector> next;
        std::vector<std::size_t> unimproved(points.size());
        std::iota(unimproved.begin(), unimproved.end(), 0);

        while (!unimproved.empty()) {
            const std::size_t pick = unimproved[rng.below(unimproved.size())];
            AlphaVector alpha = backup(pomdp, current, points[pick]);
            if (dot(alpha.values, points[pick]) < old_values[pick]) {
                const std::size_t keep = current.best(points[pick].index, points[pick].value).first;
                const auto old_alpha = current.alpha(keep);
                alpha = AlphaVector{{old_alpha.begin(), old_alpha.end()}, current.action(keep)};
            }
            std::vector<std::size_t> still;
            for (std::size_t i : unimproved) {
                new_values[i] = std::max(new_values[i], dot(alpha.values, points[i]));
                if (new_values[i] < old_values[i]) still.push_back(i);
            }
            unimproved.swap(still);
            next.push_back(std::move(alpha));
        }

        current = AlphaVectorPolicy(prune(std::move(next)));
        std::vector<double> values = values_under(current);
        double improvement = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) improvement = std::max(improvement, values[i] - old_values[i]);
        if (improvement <= options.improvement_tol) {
            // A quiet round only means the sampled backups stalled; confirm
            // with a backup of the new vectors at every point before
            // declaring convergence.
            std::vector<AlphaVector> extra;
            for (std::size_t i = 0; i < points.size(); ++i) {
                AlphaVector alpha = backup(pomdp, current, points[i]);
                if (dot(alpha.values, points[i]) - values[i] > options.improvement_tol) extra.push_back(std::move(alpha));
            }
            if (!extra.empty()) {
                auto vectors = current.vectors();
                for (auto& a : extra) vectors.push_back(std::move(a));
                current = AlphaVectorPolicy(prune(std::move(vectors)));
                values = values_under(current);
                improvement = std::numeric_limits<double>::infinity();
            }
        }
        result.round_values.push_back(std::move(values));
        if (improvement <= options.improvement_tol) {
            result.converged = true;
            break;
        }
    }
    result.policy = current;
    return result;
}

}  // namespace atpo
