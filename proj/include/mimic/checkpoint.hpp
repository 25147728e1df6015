#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mimic/error.hpp"
#include "mimic/models.hpp"

namespace mimic {

// Checkpoint layout:
//
//   mimic-checkpoint 1\n
//   kind <avg_window|linear_ar|mlp|rnn>\n
//   input_len <T>\n
//   horizon <h>\n
//   hidden_dim <H>\n
//   window <n>\n
//   shape <d0> <d1> ...\n
//   count <N>\n
//   end\n
//   <N x 8 bytes: IEEE-754 binary64, little-endian>
//
// The header is ASCII with '\n' line endings; the payload starts right after
// the newline that ends "end".
inline void write_checkpoint(std::ostream& out, const ModelSpec& spec, const ModelParams& params) {
  check_params(spec, params);
  out << "mimic-checkpoint 1\n"
      << "kind " << to_string(spec.kind) << "\n"
      << "input_len " << spec.input_len << "\n"
      << "horizon " << spec.horizon << "\n"
      << "hidden_dim " << spec.hidden_dim << "\n"
      << "window " << spec.window << "\n"
      << "shape";
  for (auto d : params.shape) out << ' ' << d;
  out << "\ncount " << params.values.size() << "\nend\n";
  for (double v : params.values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xffU);
    out.write(bytes, 8);
  }
}

struct Checkpoint {
  ModelSpec spec;
  ModelParams params;
};

inline Checkpoint read_checkpoint(std::istream& in) {
  auto expect_line = [&](const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw UsageError("checkpoint: truncated header, expected '" + key + "'");
    std::istringstream ls(line);
    std::string got;
    ls >> got;
    if (got != key) throw UsageError("checkpoint: expected '" + key + "', got '" + got + "'");
    std::string rest;
    std::getline(ls >> std::ws, rest);
    return rest;
  };
  if (expect_line("mimic-checkpoint") != "1") throw UsageError("checkpoint: unsupported version");

  Checkpoint ck;
  ck.spec.kind = parse_model_kind(expect_line("kind"));
  ck.spec.input_len = std::stoul(expect_line("input_len"));
  ck.spec.horizon = std::stoul(expect_line("horizon"));
  ck.spec.hidden_dim = std::stoul(expect_line("hidden_dim"));
  ck.spec.window = std::stoul(expect_line("window"));
  std::istringstream shape(expect_line("shape"));
  for (std::size_t d; shape >> d;) ck.params.shape.push_back(d);
  const std::size_t count = std::stoul(expect_line("count"));
  expect_line("end");

  ck.params.kind = ck.spec.kind;
  ck.params.values.resize(count);
  for (auto& v : ck.params.values) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw UsageError("checkpoint: truncated payload");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    v = std::bit_cast<double>(bits);
  }
  ck.spec.validate();
  check_params(ck.spec, ck.params);
  return ck;
}

inline void save_checkpoint(const std::string& path, const ModelSpec& spec, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write checkpoint '" + path + "'");
  write_checkpoint(out, spec, params);
  if (!out) throw RuntimeError("error writing checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace mimic
