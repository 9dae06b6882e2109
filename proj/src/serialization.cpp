#include "atpo/serialization.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

namespace atpo {

namespace {

constexpr std::array<char, 8> kMdpMagic{'A', 'T', 'P', 'O', 'M', 'D', 'P', '\0'};
constexpr std::array<char, 8> kPomdpMagic{'A', 'T', 'P', 'O', 'P', 'O', 'M', '\0'};
constexpr std::array<char, 8> kPolicyMagic{'A', 'T', 'P', 'O', 'V', 'E', 'C', '\0'};

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw FormatError("unexpected end of model data");
    return value;
}

void put_header(std::ostream& out, const std::array<char, 8>& magic) {
    out.write(magic.data(), magic.size());
    put<std::uint32_t>(out, kFormatVersion);
}

void check_header(std::istream& in, const std::array<char, 8>& magic, const char* what) {
    std::array<char, 8> found{};
    in.read(found.data(), found.size());
    if (!in || found != magic) throw FormatError(std::string("not a ") + what + " file");
    const auto version = get<std::uint32_t>(in);
    if (version != kFormatVersion) {
        throw FormatError(std::string(what) + " file version " + std::to_string(version) + ", expected " +
                          std::to_string(kFormatVersion));
    }
}

std::uint64_t get_count(std::istream& in, std::uint64_t limit = std::uint64_t{1} << 32) {
    const auto n = get<std::uint64_t>(in);
    if (n > limit) throw FormatError("implausible count in model data");
    return n;
}

void write_kernel(std::ostream& out, const StochasticKernel& k) {
    put<std::uint64_t>(out, k.num_actions());
    put<std::uint64_t>(out, k.num_rows());
    put<std::uint64_t>(out, k.num_cols());
    for (std::size_t a = 0; a < k.num_actions(); ++a) {
        for (std::size_t r = 0; r < k.num_rows(); ++r) {
            const auto row = k.row(a, r);
            put<std::uint64_t>(out, row.size());
            for (const auto& e : row) {
                put<std::uint64_t>(out, e.col);
                put<double>(out, e.prob);
            }
        }
    }
}

StochasticKernel read_kernel(std::istream& in) {
    const auto na = get_count(in);
    const auto nr = get_count(in);
    const auto nc = get_count(in);
    StochasticKernel::Builder builder(na, nr, nc);
    for (std::uint64_t i = 0; i < na * nr; ++i) {
        const auto n = get_count(in, nc);
        for (std::uint64_t j = 0; j < n; ++j) {
            const auto col = get<std::uint64_t>(in);
            if (col >= nc) throw FormatError("kernel column out of range");
            builder.add(col, get<double>(in));
        }
        builder.end_row();
    }
    return std::move(builder).finish();
}

void write_doubles(std::ostream& out, std::span<const double> values) {
    put<std::uint64_t>(out, values.size());
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& in) {
    std::vector<double> values(get_count(in));
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw FormatError("unexpected end of model data");
    return values;
}

void write_mdp_body(std::ostream& out, const TabularMDP& mdp) {
    put<double>(out, mdp.discount());
    put<double>(out, mdp.reward_bound());
    write_kernel(out, mdp.transition());
    write_doubles(out, mdp.rewards());
}

TabularMDP read_mdp_body(std::istream& in) {
    const double discount = get<double>(in);
    const double bound = get<double>(in);
    auto kernel = read_kernel(in);
    auto reward = read_doubles(in);
    try {
        TabularMDP mdp(std::move(kernel), std::move(reward), discount);
        mdp.set_reward_bound(bound);
        return mdp;
    } catch (const ModelError& e) {
        throw FormatError(std::string("invalid model: ") + e.what());
    }
}

}  // namespace

void write_mdp(std::ostream& out, const TabularMDP& mdp) {
    put_header(out, kMdpMagic);
    write_mdp_body(out, mdp);
}

TabularMDP read_mdp(std::istream& in) {
    check_header(in, kMdpMagic, "MDP");
    return read_mdp_body(in);
}

void write_pomdp(std::ostream& out, const TabularPOMDP& pomdp) {
    put_header(out, kPomdpMagic);
    write_mdp_body(out, pomdp.base());
    write_kernel(out, pomdp.observation());
    write_doubles(out, pomdp.initial_belief().probs());
}

TabularPOMDP read_pomdp(std::istream& in) {
    check_header(in, kPomdpMagic, "POMDP");
    auto base = read_mdp_body(in);
    auto observation = read_kernel(in);
    auto initial = read_doubles(in);
    try {
        return TabularPOMDP(std::move(base), std::move(observation), Belief(std::move(initial)));
    } catch (const ModelError& e) {
        throw FormatError(std::string("invalid POMDP: ") + e.what());
    }
}

void write_policy(std::ostream& out, const AlphaVectorPolicy& policy) {
    put_header(out, kPolicyMagic);
    put<std::uint64_t>(out, policy.num_states());
    put<std::uint64_t>(out, policy.size());
    for (std::size_t i = 0; i < policy.size(); ++i) {
        put<std::uint64_t>(out, policy.action(i));
        const auto alpha = policy.alpha(i);
        out.write(reinterpret_cast<const char*>(alpha.data()), static_cast<std::streamsize>(alpha.size() * sizeof(double)));
    }
}

AlphaVectorPolicy read_policy(std::istream& in) {
    check_header(in, kPolicyMagic, "policy");
    const auto nx = get_count(in);
    const auto n = get_count(in);
    std::vector<AlphaVector> vectors(n);
    for (auto& v : vectors) {
        v.action = get<std::uint64_t>(in);
        v.values.resize(nx);
        in.read(reinterpret_cast<char*>(v.values.data()), static_cast<std::streamsize>(nx * sizeof(double)));
        if (!in) throw FormatError("unexpected end of policy data");
    }
    try {
        return AlphaVectorPolicy(std::move(vectors));
    } catch (const ModelError& e) {
        throw FormatError(std::string("invalid policy: ") + e.what());
    }
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read " + path.string());
    return in;
}

}  // namespace

void save_pomdp(const std::filesystem::path& path, const TabularPOMDP& pomdp) {
    auto out = open_out(path);
    write_pomdp(out, pomdp);
}

TabularPOMDP load_pomdp(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_pomdp(in);
}

void save_policy(const std::filesystem::path& path, const AlphaVectorPolicy& policy) {
    auto out = open_out(path);
    write_policy(out, policy);
}

AlphaVectorPolicy load_policy(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_policy(in);
}

namespace {

class TextReader {
public:
    explicit TextReader(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::istringstream words(line);
            std::string w;
            while (words >> w) tokens_.push_back(w);
        }
    }

    bool done() const { return pos_ >= tokens_.size(); }
    const std::string& peek() const { return tokens_.at(pos_); }

    std::string word() {
        if (done()) throw FormatError("unexpected end of text model");
        return tokens_[pos_++];
    }

    double number() {
        const std::string w = word();
        try {
            std::size_t used = 0;
            const double v = std::stod(w, &used);
            if (used != w.size()) throw std::invalid_argument(w);
            return v;
        } catch (const std::exception&) {
            throw FormatError("expected a number, found '" + w + "'");
        }
    }

    std::size_t count() {
        const double v = number();
        if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
            throw FormatError("expected a non-negative integer");
        }
        return static_cast<std::size_t>(v);
    }

private:
    std::vector<std::string> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace

TabularPOMDP parse_pomdp_text(std::istream& in) {
    TextReader reader(in);
    std::size_t nx = 0, na = 0, nz = 0;
    double discount = -1.0;
    std::vector<double> initial;
    std::vector<std::vector<double>> T, O;
    std::vector<double> R;
    bool uniform_initial = false;

    auto block = [&](std::size_t rows, std::size_t cols) {
        std::vector<double> values(rows * cols);
        for (double& v : values) v = reader.number();
        return values;
    };
    auto need_dims = [&] {
        if (nx == 0 || na == 0 || nz == 0) throw FormatError("states/actions/observations must precede kernels");
    };

    while (!reader.done()) {
        const std::string key = reader.word();
        if (key == "states") {
            nx = reader.count();
        } else if (key == "actions") {
            na = reader.count();
        } else if (key == "observations") {
            nz = reader.count();
        } else if (key == "discount") {
            discount = reader.number();
        } else if (key == "initial") {
            need_dims();
            if (reader.peek() == "uniform") {
                reader.word();
                uniform_initial = true;
            } else {
                initial = block(1, nx);
            }
        } else if (key == "T" || key == "O") {
            need_dims();
            auto& target = key == "T" ? T : O;
            target.resize(na);
            const std::size_t a = reader.count();
            if (a >= na) throw FormatError(key + " block for action " + std::to_string(a) + " out of range");
            if (!target[a].empty()) throw FormatError("duplicate " + key + " block for action " + std::to_string(a));
            target[a] = block(nx, key == "T" ? nx : nz);
        } else if (key == "R") {
            need_dims();
            R = block(nx, na);
        } else {
            throw FormatError("unknown keyword '" + key + "'");
        }
    }
    need_dims();
    if (discount < 0.0) throw FormatError("missing discount");
    if (R.empty()) throw FormatError("missing R block");
    auto flatten = [&](const std::vector<std::vector<double>>& blocks, const char* name) {
        if (blocks.size() != na) throw FormatError(std::string("missing ") + name + " blocks");
        std::vector<double> flat;
        for (std::size_t a = 0; a < na; ++a) {
            if (blocks[a].empty()) throw FormatError(std::string("missing ") + name + " block for action " + std::to_string(a));
            flat.insert(flat.end(), blocks[a].begin(), blocks[a].end());
        }
        return flat;
    };
    const auto t_flat = flatten(T, "T");
    const auto o_flat = flatten(O, "O");
    try {
        TabularMDP base(StochasticKernel::from_dense(na, nx, nx, t_flat), std::move(R), discount);
        Belief b0 = uniform_initial || initial.empty() ? Belief::uniform(nx) : Belief(std::move(initial));
        return TabularPOMDP(std::move(base), StochasticKernel::from_dense(na, nx, nz, o_flat), std::move(b0));
    } catch (const ModelError& e) {
        throw FormatError(std::string("invalid text model: ") + e.what());
    }
}

TabularPOMDP parse_pomdp_text(const std::string& text) {
    std::istringstream in(text);
    return parse_pomdp_text(in);
}

std::string format_pomdp_text(const TabularPOMDP& pomdp) {
    std::ostringstream out;
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    const std::size_t nx = pomdp.num_states(), na = pomdp.num_actions(), nz = pomdp.num_observations();
    out << "states " << nx << "\nactions " << na << "\nobservations " << nz << "\ndiscount " << pomdp.discount()
        << "\ninitial";
    for (double p : pomdp.initial_belief().probs()) out << ' ' << p;
    out << '\n';
    for (std::size_t a = 0; a < na; ++a) {
        out << "T " << a << '\n';
        for (std::size_t x = 0; x < nx; ++x) {
            for (std::size_t y = 0; y < nx; ++y) out << (y ? " " : "") << pomdp.base().transition().at(a, x, y);
            out << '\n';
        }
    }
    for (std::size_t a = 0; a < na; ++a) {
        out << "O " << a << '\n';
        for (std::size_t y = 0; y < nx; ++y) {
            for (std::size_t z = 0; z < nz; ++z) out << (z ? " " : "") << pomdp.observation().at(a, y, z);
            out << '\n';
        }
    }
    out << "R\n";
    for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t a = 0; a < na; ++a) out << (a ? " " : "") << pomdp.base().reward(x, a);
        out << '\n';
    }
    return out.str();
}

}  // namespace atpo
