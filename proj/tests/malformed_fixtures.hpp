#pragma once

// Malformed model sources with the position each error must point at.

#include <vector>

#include "swarmk/errors.hpp"

struct Malformed {
  const char* name;
  const char* text;
  swarmk::ParseErrorKind kind;
  int line;
  int column;
  const char* fragment;  // expected inside the message
};

inline const std::vector<Malformed> kMalformed{
    {"missing target", "state S = 1\nrate(alpha*S): S -> ", swarmk::ParseErrorKind::syntax, 2, 21, "expected identifier, found end of input"},
    {"bad character", "state S = 1\nparam k = 2 $ 3", swarmk::ParseErrorKind::lexical, 2, 13, "'$'"},
    {"malformed exponent", "param k = 1.5e+", swarmk::ParseErrorKind::lexical, 1, 14, "exponent"},
    {"missing equals", "param k 2", swarmk::ParseErrorKind::syntax, 1, 9, "expected '='"},
    {"unbalanced paren", "state S = 1\nstate G = 0\nrate((S + 1) : S -> G", swarmk::ParseErrorKind::syntax, 3, 14, "expected ')'"},
    {"unknown identifier", "state S = 1\nstate G = 0\n\nrate(k * S) : S -> G", swarmk::ParseErrorKind::semantic, 4, 6, "unknown identifier k"},
    {"unknown state", "state S = 1\nrate(S) : S -> Q", swarmk::ParseErrorKind::semantic, 2, 16, "unknown state Q"},
    {"duplicate name", "param a = 1\n  state a = 2", swarmk::ParseErrorKind::semantic, 2, 9, "duplicate name a"},
    {"reserved name", "param N0 = 3", swarmk::ParseErrorKind::semantic, 1, 7, "reserved"},
    {"keyword as name", "state rate = 1", swarmk::ParseErrorKind::syntax, 1, 7, "expected"},
    {"delay arity", "state S = 1\nstate G = 0\nrate(delay(S)) : S -> G", swarmk::ParseErrorKind::syntax, 3, 13, "expected ','"},
    {"state in window", "state S = 1\nstate G = 0\nrate(histint(S, G)) : S -> G", swarmk::ParseErrorKind::semantic, 3, 17, "only parameters"},
    {"nested history", "param T = 1\nstate S = 1\nstate G = 0\nrate(delay(histint(S, T), T)) : S -> G", swarmk::ParseErrorKind::semantic, 4, 12, "nested"},
    {"effect on a state", "state S = 1\nstate G = 0\nrate(S) : S -> G ; G += 1", swarmk::ParseErrorKind::semantic, 3, 20, "not an environment counter"},
    {"trailing operator", "param k = 2 *", swarmk::ParseErrorKind::syntax, 1, 14, "end of input"},
    {"comment then error", "# header\nparam k = 1 # ok\nstate = 3", swarmk::ParseErrorKind::syntax, 3, 7, "expected"},
};

