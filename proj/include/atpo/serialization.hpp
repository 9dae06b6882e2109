#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "atpo/mdp.hpp"
#include "atpo/pomdp.hpp"

namespace atpo {

/// Version written into every binary model/policy file. Readers reject
/// other versions with FormatError.
inline constexpr std::uint32_t kFormatVersion = 1;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Binary layout (little-endian host order, 64-bit floats and counts):
//   magic[8] version:u32 then the payload. Kernels are stored row by row as
//   (count, (col, prob)*count); rewards as a row-major |X|x|A| block.
void write_mdp(std::ostream& out, const TabularMDP& mdp);
TabularMDP read_mdp(std::istream& in);

void write_pomdp(std::ostream& out, const TabularPOMDP& pomdp);
TabularPOMDP read_pomdp(std::istream& in);

void write_policy(std::ostream& out, const AlphaVectorPolicy& policy);
AlphaVectorPolicy read_policy(std::istream& in);

void save_pomdp(const std::filesystem::path& path, const TabularPOMDP& pomdp);
TabularPOMDP load_pomdp(const std::filesystem::path& path);
void save_policy(const std::filesystem::path& path, const AlphaVectorPolicy& policy);
AlphaVectorPolicy load_policy(const std::filesystem::path& path);

/// Parses the plain-text POMDP format used for hand-written models:
///
///   # comment
///   states 2
///   actions 1
///   observations 2
///   discount 0.95
///   initial 0.5 0.5          (or "initial uniform")
///   T 0                      then |X| rows of |X| numbers
///   O 0                      then |X| rows of |Z| numbers (rows indexed by next state)
///   R                        then |X| rows of |A| numbers
///
/// T and O blocks must appear once per action.
TabularPOMDP parse_pomdp_text(std::istream& in);
TabularPOMDP parse_pomdp_text(const std::string& text);
std::string format_pomdp_text(const TabularPOMDP& pomdp);

}  // namespace atpo
