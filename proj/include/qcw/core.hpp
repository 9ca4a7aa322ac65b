#pragma once
// Shared primitives: arbitrary-precision coefficient type, error taxonomy,
// hashing helpers, and small checked-arithmetic utilities.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qcw {

/// Coefficient type for all character polynomials. Multiplicities grow
/// multiplicatively with the label parameters, so machine integers are not safe.
using Int = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// Error taxonomy. Every failure mode visible through the public API derives
// from Error and carries a stable machine-readable code string.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define QCW_DEFINE_ERROR(Name, CodeStr)                          \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(CodeStr, what) {} \
  }

QCW_DEFINE_ERROR(InvalidRank, "InvalidRank");
QCW_DEFINE_ERROR(InvalidNode, "InvalidNode");
QCW_DEFINE_ERROR(InvalidLabel, "InvalidLabel");
QCW_DEFINE_ERROR(ConstraintViolated, "ConstraintViolated");
QCW_DEFINE_ERROR(NotDominant, "NotDominant");
QCW_DEFINE_ERROR(UndefinedValue, "Undefined");
QCW_DEFINE_ERROR(NonSpecialDetected, "NonSpecialDetected");
QCW_DEFINE_ERROR(BudgetExceeded, "BudgetExceeded");
QCW_DEFINE_ERROR(IncompleteCharacter, "IncompleteCharacter");
QCW_DEFINE_ERROR(NonExactDivision, "NonExactDivision");
QCW_DEFINE_ERROR(BoundaryVertex, "BoundaryVertex");
QCW_DEFINE_ERROR(AmbiguousMatch, "AmbiguousMatch");
QCW_DEFINE_ERROR(ParseError, "ParseError");
QCW_DEFINE_ERROR(Unsupported, "Unsupported");

#undef QCW_DEFINE_ERROR

/// Window-depth failure carries the depth that would have sufficed.
class WindowTooSmall : public Error {
 public:
  WindowTooSmall(int required_depth, const std::string& what)
      : Error("WindowTooSmall", what), required_depth_(required_depth) {}
  int required_depth() const noexcept { return required_depth_; }

 private:
  int required_depth_;
};

// ---------------------------------------------------------------------------
// Checked machine arithmetic: exponents are kept as machine integers for
// speed, but overflow must never wrap silently.
// ---------------------------------------------------------------------------

inline std::int32_t checked_add(std::int32_t a, std::int32_t b) {
  std::int64_t r = static_cast<std::int64_t>(a) + b;
  if (r > INT32_MAX || r < INT32_MIN) throw Error("Overflow", "exponent overflow");
  return static_cast<std::int32_t>(r);
}

// ---------------------------------------------------------------------------
// FNV-1a hashing (stable across runs; used for container hashing and for
// content-addressed cache keys).
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t seed = 14695981039346656037ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t seed) {
  return fnv1a(&v, sizeof(v), seed);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return fnv1a_u64(b, a ^ 0x9e3779b97f4a7c15ULL);
}

}  // namespace qcw
