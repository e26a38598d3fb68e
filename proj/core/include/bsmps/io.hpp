#pragma once

/// File formats: the plain-text coefficient format and the portable tensor
/// container.
///
/// Coefficient files (orbital indices 1-based):
///
///     # comment
///     K 8
///     1B i j value
///     2B i1 i2 j1 j2 value
///
/// Duplicate entries are summed.  A one-body entry given only on one side of
/// the diagonal is mirrored; entries given on both sides must agree.
///
/// Containers are single JSON documents: a header with the format name,
/// version, kind ("full" or "block"), endianness, K, N and the rank or size
/// table, plus a base64 payload of little-endian 64-bit floats holding every
/// block in row-major order (core, then alpha, then sector ascending).

#include "bsmps/block_mps.hpp"
#include "bsmps/coeffs.hpp"
#include "bsmps/full_mps.hpp"

#include <iosfwd>
#include <string>
#include <variant>

namespace bsmps {

struct CoefficientFile {
  int K = 0;
  OneBodyCoeffs t;
  TwoBodyCoeffs v;
  bool has_two_body = false;
};

/// Throws ParseError (with line numbers) on malformed input and
/// ValidationError on inconsistent one-body symmetry.
CoefficientFile parse_coefficients(std::istream& in);
CoefficientFile read_coefficients(const std::string& path);

inline constexpr int kContainerVersion = 1;

std::string to_container(const FullMPS& x);
std::string to_container(const BlockMPS& x);

/// Throws ParseError on malformed containers and ValidationError if the
/// decoded tensor violates its structural invariants.
std::variant<FullMPS, BlockMPS> from_container(const std::string& text);

void write_container(const std::string& path, const std::variant<FullMPS, BlockMPS>& x);
std::variant<FullMPS, BlockMPS> read_container(const std::string& path);

}  // namespace bsmps
