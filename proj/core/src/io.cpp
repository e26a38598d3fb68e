#include "bsmps/io.hpp"

#include <boost/beast/core/detail/base64.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace bsmps {

namespace {

using json = nlohmann::json;
namespace b64 = boost::beast::detail::base64;

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw ParseError("line " + std::to_string(line) + ": " + msg);
}

int parse_index(const std::string& tok, int K, int line) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(tok, &pos);
  } catch (const std::exception&) {
    parse_fail(line, "invalid orbital index '" + tok + "'");
  }
  if (pos != tok.size()) parse_fail(line, "invalid orbital index '" + tok + "'");
  if (v < 1 || v > K) parse_fail(line, "orbital index " + tok + " out of range 1.." + std::to_string(K));
  return v - 1;
}

double parse_value(const std::string& tok, int line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    parse_fail(line, "invalid value '" + tok + "'");
  }
  if (pos != tok.size()) parse_fail(line, "invalid value '" + tok + "'");
  return v;
}

// ---- payload encoding

void append_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

double read_le(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw ParseError("container payload too short");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 8;
  return std::bit_cast<double>(bits);
}

void append_matrix(std::string& out, const Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) append_le(out, m(i, j));
}

Mat read_matrix(const std::string& in, std::size_t& pos, int rows, int cols) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = read_le(in, pos);
  return m;
}

std::string encode(const std::string& bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::string decode(const std::string& text) {
  // the decoder stops at padding, so strip it first (at most two '=')
  std::size_t len = text.size();
  while (len > 0 && text.size() - len < 2 && text[len - 1] == '=') --len;
  if (text.size() % 4 != 0) throw ParseError("container payload is not valid base64");
  std::string out(b64::decoded_size(text.size()), '\0');
  const auto [written, read] = b64::decode(out.data(), text.data(), len);
  if (read != len) throw ParseError("container payload is not valid base64");
  out.resize(written);
  return out;
}

json header(const char* kind, int K) {
  return json{{"format", "bsmps"}, {"version", kContainerVersion}, {"kind", kind},
              {"endianness", "little"}, {"K", K}};
}

}  // namespace

CoefficientFile parse_coefficients(std::istream& in) {
  CoefficientFile f;
  std::string line;
  int lineno = 0;
  std::set<std::pair<int, int>> given;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (f.K == 0) {
      if (tok[0] != "K" || tok.size() != 2) parse_fail(lineno, "expected 'K <int>' as the first entry");
      std::size_t pos = 0;
      try {
        f.K = std::stoi(tok[1], &pos);
      } catch (const std::exception&) {
        parse_fail(lineno, "invalid orbital count '" + tok[1] + "'");
      }
      if (pos != tok[1].size() || f.K < 1) parse_fail(lineno, "invalid orbital count '" + tok[1] + "'");
      if (f.K > 64) parse_fail(lineno, "orbital count too large");
      f.t.K = f.K;
      f.t.t = Mat::Zero(f.K, f.K);
      f.v = TwoBodyCoeffs(f.K);
      continue;
    }
    if (tok[0] == "1B") {
      if (tok.size() != 4) parse_fail(lineno, "expected '1B i j value'");
      const int i = parse_index(tok[1], f.K, lineno), j = parse_index(tok[2], f.K, lineno);
      f.t.t(i, j) += parse_value(tok[3], lineno);
      given.insert({i, j});
    } else if (tok[0] == "2B") {
      if (tok.size() != 6) parse_fail(lineno, "expected '2B i1 i2 j1 j2 value'");
      const int a = parse_index(tok[1], f.K, lineno), b = parse_index(tok[2], f.K, lineno);
      const int c = parse_index(tok[3], f.K, lineno), d = parse_index(tok[4], f.K, lineno);
      f.v.raw(a, b, c, d) += parse_value(tok[5], lineno);
      f.has_two_body = true;
    } else if (tok[0] == "K") {
      parse_fail(lineno, "duplicate 'K' line");
    } else {
      parse_fail(lineno, "unknown record '" + tok[0] + "'");
    }
  }
  if (f.K == 0) throw ParseError("missing 'K <int>' line");
  for (int i = 0; i < f.K; ++i)
    for (int j = i + 1; j < f.K; ++j) {
      const bool up = given.count({i, j}) > 0, lo = given.count({j, i}) > 0;
      if (up && !lo) f.t.t(j, i) = f.t.t(i, j);
      if (lo && !up) f.t.t(i, j) = f.t.t(j, i);
    }
  f.t.validate();
  f.v.finalize();
  return f;
}

CoefficientFile read_coefficients(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open coefficient file '" + path + "'");
  return parse_coefficients(in);
}

std::string to_container(const FullMPS& x) {
  x.validate();
  json h = header("full", x.order());
  h["ranks"] = x.ranks();
  std::string bytes;
  for (const Core& c : x.cores)
    for (const Mat& s : c.slice) append_matrix(bytes, s);
  h["payload"] = encode(bytes);
  return h.dump(1) + "\n";
}

std::string to_container(const BlockMPS& x) {
  x.validate();
  json h = header("block", x.K);
  h["N"] = x.N;
  json rho = json::array();
  for (const auto& t : x.rho) {
    json b = json::array();
    for (const auto& [n, s] : t) b.push_back({n, s});
    rho.push_back(b);
  }
  h["rho"] = rho;
  std::string bytes;
  for (const BlockCore& c : x.cores)
    for (int a = 0; a < 2; ++a)
      for (const auto& [n, m] : c.blocks(a)) append_matrix(bytes, m);
  h["payload"] = encode(bytes);
  return h.dump(1) + "\n";
}

std::variant<FullMPS, BlockMPS> from_container(const std::string& text) {
  json h;
  try {
    h = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("container is not valid JSON: ") + e.what());
  }
  try {
    if (h.at("format").get<std::string>() != "bsmps") throw ParseError("not a bsmps container");
    if (h.at("version").get<int>() != kContainerVersion) throw ParseError("unsupported container version");
    if (h.at("endianness").get<std::string>() != "little") throw ParseError("unsupported endianness");
    const std::string kind = h.at("kind").get<std::string>();
    const int K = h.at("K").get<int>();
    if (K < 1) throw ParseError("invalid order");
    const std::string bytes = decode(h.at("payload").get<std::string>());
    std::size_t pos = 0;
    if (kind == "full") {
      const auto ranks = h.at("ranks").get<std::vector<int>>();
      if (static_cast<int>(ranks.size()) != K + 1) throw ParseError("rank list has wrong length");
      if (std::any_of(ranks.begin(), ranks.end(), [](int r) { return r < 1; })) throw ParseError("invalid rank");
      FullMPS x;
      for (int c = 0; c < K; ++c) {
        Core core;
        for (int a = 0; a < 2; ++a) core.slice.push_back(read_matrix(bytes, pos, ranks[c], ranks[c + 1]));
        x.cores.push_back(std::move(core));
      }
      if (pos != bytes.size()) throw ParseError("container payload has trailing data");
      x.validate();
      return x;
    }
    if (kind == "block") {
      BlockMPS x;
      x.K = K;
      x.N = h.at("N").get<int>();
      const json& rho = h.at("rho");
      if (!rho.is_array() || static_cast<int>(rho.size()) != K + 1) throw ParseError("size table has wrong length");
      for (const json& b : rho) {
        std::map<int, int> t;
        for (const json& e : b) {
          const auto p = e.get<std::pair<int, int>>();
          if (p.second < 1) throw ParseError("invalid sector size");
          t[p.first] = p.second;
        }
        x.rho.push_back(std::move(t));
      }
      x.cores.assign(static_cast<size_t>(K), BlockCore{});
      for (int c = 0; c < K; ++c)
        for (int a = 0; a < 2; ++a)
          for (const auto& [n, s] : x.rho[c]) {
            const int r = x.size(c + 1, n + a);
            if (r > 0) x.cores[c].blocks(a)[n] = read_matrix(bytes, pos, s, r);
          }
      if (pos != bytes.size()) throw ParseError("container payload has trailing data");
      x.validate();
      return x;
    }
    throw ParseError("unknown container kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed container header: ") + e.what());
  }
}

void write_container(const std::string& path, const std::variant<FullMPS, BlockMPS>& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << std::visit([](const auto& v) { return to_container(v); }, x);
}

std::variant<FullMPS, BlockMPS> read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open container '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_container(ss.str());
}

}  // namespace bsmps
