#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "soundmind/error.hpp"
#include "soundmind/policy.hpp"

namespace soundmind {

class CheckpointError : public Error {
public:
  using Error::Error;
};

/// Text checkpoint:
///   soundmind-policy 1
///   vocab <V> features <D> task_dim <d> k <k> vocab_hash <hex>
///   bias <V values>
///   <D lines of V values>
/// Values are written with 17 significant digits so reading restores them
/// bit-for-bit.
inline void write_checkpoint(std::ostream& out, const PolicyParams& p, std::uint64_t vocab_hash) {
  const auto& s = p.shape;
  out << "soundmind-policy 1\n";
  out << "vocab " << s.vocab << " features " << s.feature_dim() << " task_dim " << s.task_dim << " k " << s.k
      << " vocab_hash " << std::hex << vocab_hash << std::dec << "\n";
  out << std::setprecision(17);
  out << "bias";
  for (double b : p.bias) out << ' ' << b;
  out << '\n';
  for (std::size_t f = 0; f < s.feature_dim(); ++f) {
    for (std::size_t v = 0; v < s.vocab; ++v) out << (v ? " " : "") << p.weight(f, v);
    out << '\n';
  }
}

struct Checkpoint {
  PolicyParams params;
  std::uint64_t vocab_hash = 0;
};

inline Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "soundmind-policy 1") throw CheckpointError("not a soundmind policy checkpoint");
  if (!std::getline(in, line)) throw CheckpointError("missing checkpoint header");
  std::istringstream hdr(line);
  std::string k1, k2, k3, k4, k5;
  std::size_t V = 0, D = 0, d = 0, k = 0;
  Checkpoint ck;
  hdr >> k1 >> V >> k2 >> D >> k3 >> d >> k4 >> k >> k5 >> std::hex >> ck.vocab_hash;
  if (!hdr || k1 != "vocab" || k2 != "features" || k3 != "task_dim" || k4 != "k" || k5 != "vocab_hash") {
    throw CheckpointError("malformed checkpoint header: " + line);
  }
  PolicyShape shape{d, V, k};
  if (shape.feature_dim() != D) throw CheckpointError("feature dimension disagrees with task_dim + k * vocab");
  ck.params = PolicyParams(shape);
  auto read_value = [&](std::istringstream& row, std::size_t line_no) {
    std::string tok;
    if (!(row >> tok)) throw CheckpointError("checkpoint line " + std::to_string(line_no) + " is too short");
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw CheckpointError("bad number '" + tok + "' on checkpoint line " + std::to_string(line_no));
    }
  };
  if (!std::getline(in, line)) throw CheckpointError("missing bias line");
  {
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag != "bias") throw CheckpointError("expected bias line");
    for (auto& b : ck.params.bias) b = read_value(row, 3);
  }
  for (std::size_t f = 0; f < D; ++f) {
    if (!std::getline(in, line)) throw CheckpointError("checkpoint truncated at weight row " + std::to_string(f));
    std::istringstream row(line);
    for (std::size_t v = 0; v < V; ++v) ck.params.weight(f, v) = read_value(row, f + 4);
  }
  if (!ck.params.all_finite()) throw CheckpointError("checkpoint contains non-finite values");
  return ck;
}

inline void save_checkpoint(const std::string& path, const PolicyParams& p, std::uint64_t vocab_hash) {
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  write_checkpoint(out, p, vocab_hash);
  if (!out) throw CheckpointError("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace soundmind
