#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace tscd {

// End mark of an edge at one of its two nodes. Conflict records contradictory
// orientation proposals and is sticky once set.
enum class Mark : uint8_t { Circle, Head, Tail, Conflict };

// Middle mark of an edge. Tracks which separating-set searches have been
// exhausted for the pair:
//   Unknown  '?'  nothing exhausted yet
//   Left     'L'  searches centered on the smaller node exhausted
//   Right    'R'  searches centered on the larger node exhausted
//   Both     '!'  both of the above
//   Empty    ''   pair is definitely adjacent in the target graph
enum class Middle : uint8_t { Unknown, Left, Right, Both, Empty };

// A variable at a time lag. Lags count backwards from the reference time, so
// lag 0 is the latest node and larger lags are further in the past.
struct Node {
  int var = 0;
  int lag = 0;

  friend bool operator==(const Node& a, const Node& b) {
    return a.var == b.var && a.lag == b.lag;
  }
  friend bool operator!=(const Node& a, const Node& b) { return !(a == b); }
};

// Total order consistent with time order: a comes before b if a lies further
// in the past, with ties at equal lag broken by variable index.
inline bool node_before(const Node& a, const Node& b) {
  if (a.lag != b.lag) return a.lag > b.lag;
  return a.var < b.var;
}

// Strict weak order usable as a comparator for sorted containers.
inline bool node_less(const Node& a, const Node& b) {
  if (a.lag != b.lag) return a.lag > b.lag;
  return a.var < b.var;
}

struct NodeLess {
  bool operator()(const Node& a, const Node& b) const { return node_less(a, b); }
};

struct NodeHash {
  size_t operator()(const Node& n) const {
    return std::hash<int64_t>()((static_cast<int64_t>(n.var) << 32) ^
                                static_cast<uint32_t>(n.lag));
  }
};

// Combination of middle marks when new exhaustion information arrives.
// Forms a join in the lattice  ? < L,R < ! < empty.
inline Middle combine_middle_marks(Middle a, Middle b) {
  if (a == b) return a;
  if (a == Middle::Empty || b == Middle::Empty) return Middle::Empty;
  if (a == Middle::Both || b == Middle::Both) return Middle::Both;
  if (a == Middle::Unknown) return b;
  if (b == Middle::Unknown) return a;
  // one Left and one Right
  return Middle::Both;
}

inline const char* mark_name(Mark m) {
  switch (m) {
    case Mark::Circle: return "circle";
    case Mark::Head: return "head";
    case Mark::Tail: return "tail";
    case Mark::Conflict: return "x";
  }
  return "?";
}

inline Mark mark_from_name(const std::string& s) {
  if (s == "circle") return Mark::Circle;
  if (s == "head") return Mark::Head;
  if (s == "tail") return Mark::Tail;
  if (s == "x") return Mark::Conflict;
  throw std::runtime_error("unknown end mark '" + s + "'");
}

inline const char* middle_name(Middle m) {
  switch (m) {
    case Middle::Unknown: return "?";
    case Middle::Left: return "L";
    case Middle::Right: return "R";
    case Middle::Both: return "!";
    case Middle::Empty: return "";
  }
  return "?";
}

inline Middle middle_from_name(const std::string& s) {
  if (s == "?") return Middle::Unknown;
  if (s == "L") return Middle::Left;
  if (s == "R") return Middle::Right;
  if (s == "!") return Middle::Both;
  if (s.empty()) return Middle::Empty;
  throw std::runtime_error("unknown middle mark '" + s + "'");
}

}  // namespace tscd
