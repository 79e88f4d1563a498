#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace piecewise {

// One edge label of a labelled graph: a 1-based alphabet index plus a sign.
// The inverse letter is the same index with the sign flipped; each graph of
// alphabet size k therefore has 2k directed letters.
struct Letter {
  int index = 1;   // 1..k
  bool inv = false;

  Letter() = default;
  Letter(int idx, bool inverse) : index(idx), inv(inverse) {
    if (idx < 1) throw std::invalid_argument("Letter: index is 1-based");
  }
  static Letter pos(int idx) { return Letter(idx, false); }
  static Letter neg(int idx) { return Letter(idx, true); }

  Letter inverse() const { return Letter(index, !inv); }

  bool operator==(const Letter& o) const { return index == o.index && inv == o.inv; }
  bool operator<(const Letter& o) const {
    return index != o.index ? index < o.index : inv < o.inv;
  }

  std::string encode() const {
    return (inv ? "-" : "+") + std::to_string(index);
  }
};

using Word = std::vector<Letter>;

inline Word inverse_word(const Word& w) {
  Word r;
  r.reserve(w.size());
  for (auto it = w.rbegin(); it != w.rend(); ++it) r.push_back(it->inverse());
  return r;
}

}  // namespace piecewise
