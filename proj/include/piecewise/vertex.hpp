#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace piecewise {

// Tagged vertex identity for the universes that occur in the constructions:
// plain Cayley graphs (Int/Grid/Res/Fin), rooted gluings (Root/Glued),
// pocket extensions (Star), Houghton graphs (Root/Ray) and bubble graphs
// (Bub).  Ordering is lexicographic on (tag, payload) so that sorted vertex
// lists and witness tie-breaks are reproducible across runs.
enum class VTag : std::uint8_t {
  Root = 0,   // shared root of a rooted gluing / Houghton origin
  Star,       // the extra pocket point
  Int,        // Z factor, coordinate a
  Grid,       // Z^d factor, coordinates vec
  Res,        // Z/bZ factor, a mod b
  Fin,        // element index in an explicit finite multiplication table
  Ray,        // Houghton ray point r_{a,b}, ray a >= 1, depth b >= 1
  Bub,        // bubble vertex (w, u): digit word vec over {1,2}, offset a
  Glued,      // namespaced vertex of a general gluing: component a, inner id
};

class VertexId {
 public:
  VertexId() : tag_(VTag::Root) {}

  static VertexId root() { return VertexId(); }
  static VertexId star() {
    VertexId v;
    v.tag_ = VTag::Star;
    return v;
  }
  static VertexId integer(std::int64_t n) {
    VertexId v;
    v.tag_ = VTag::Int;
    v.a_ = n;
    return v;
  }
  static VertexId grid(std::vector<std::int64_t> coords) {
    VertexId v;
    v.tag_ = VTag::Grid;
    v.vec_ = std::move(coords);
    return v;
  }
  static VertexId residue(std::int64_t r, std::int64_t mod) {
    if (mod <= 0) throw std::invalid_argument("residue: modulus must be positive");
    VertexId v;
    v.tag_ = VTag::Res;
    v.a_ = ((r % mod) + mod) % mod;
    v.b_ = mod;
    return v;
  }
  static VertexId finite(std::int64_t index) {
    VertexId v;
    v.tag_ = VTag::Fin;
    v.a_ = index;
    return v;
  }
  static VertexId ray(std::int64_t ray_index, std::int64_t depth) {
    if (ray_index < 1 || depth < 1)
      throw std::invalid_argument("ray: ray index and depth are 1-based");
    VertexId v;
    v.tag_ = VTag::Ray;
    v.a_ = ray_index;
    v.b_ = depth;
    return v;
  }
  // Bubble vertex (w, u); w is a word over digits {1,2}, u the cycle offset.
  static VertexId bubble(std::vector<std::int64_t> word, std::int64_t offset) {
    VertexId v;
    v.tag_ = VTag::Bub;
    v.vec_ = std::move(word);
    v.a_ = offset;
    for (auto d : v.vec_)
      if (d != 1 && d != 2) throw std::invalid_argument("bubble: digits must be 1 or 2");
    return v;
  }
  static VertexId glued(std::int64_t component, VertexId inner) {
    VertexId v;
    v.tag_ = VTag::Glued;
    v.a_ = component;
    v.inner_ = std::make_shared<VertexId>(std::move(inner));
    return v;
  }

  VTag tag() const { return tag_; }
  std::int64_t a() const { return a_; }
  std::int64_t b() const { return b_; }
  const std::vector<std::int64_t>& vec() const { return vec_; }
  const VertexId& inner() const {
    if (!inner_) throw std::logic_error("VertexId: no inner id");
    return *inner_;
  }

  bool operator==(const VertexId& o) const {
    if (tag_ != o.tag_ || a_ != o.a_ || b_ != o.b_ || vec_ != o.vec_) return false;
    if (!inner_ != !o.inner_) return false;
    return !inner_ || *inner_ == *o.inner_;
  }
  bool operator!=(const VertexId& o) const { return !(*this == o); }
  bool operator<(const VertexId& o) const {
    if (tag_ != o.tag_) return tag_ < o.tag_;
    if (tag_ == VTag::Bub) {  // word length first: level order matches tree depth
      if (vec_.size() != o.vec_.size()) return vec_.size() < o.vec_.size();
      if (vec_ != o.vec_) return vec_ < o.vec_;
      return a_ < o.a_;
    }
    if (a_ != o.a_) return a_ < o.a_;
    if (b_ != o.b_) return b_ < o.b_;
    if (vec_ != o.vec_) return vec_ < o.vec_;
    if (!inner_ || !o.inner_) return static_cast<bool>(o.inner_) && !inner_;
    return *inner_ < *o.inner_;
  }

  // Canonical text encoding; doubles as the deterministic hash/sort key.
  std::string encode() const {
    switch (tag_) {
      case VTag::Root: return "o";
      case VTag::Star: return "*";
      case VTag::Int: return "Int(" + std::to_string(a_) + ")";
      case VTag::Grid: {
        std::string s = "Grid(";
        for (std::size_t i = 0; i < vec_.size(); ++i) {
          if (i) s += ",";
          s += std::to_string(vec_[i]);
        }
        return s + ")";
      }
      case VTag::Res:
        return "Res(" + std::to_string(a_) + "/" + std::to_string(b_) + ")";
      case VTag::Fin: return "Fin(" + std::to_string(a_) + ")";
      case VTag::Ray:
        return "Ray(" + std::to_string(a_) + "," + std::to_string(b_) + ")";
      case VTag::Bub: {
        std::string s = "Bub(";
        for (auto d : vec_) s += static_cast<char>('0' + d);
        return s + ";" + std::to_string(a_) + ")";
      }
      case VTag::Glued:
        return "Glu(" + std::to_string(a_) + ";" + inner_->encode() + ")";
    }
    return "?";
  }

  std::size_t hash() const {
    std::size_t h = std::hash<int>()(static_cast<int>(tag_));
    auto mix = [&h](std::size_t x) {
      h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    mix(std::hash<std::int64_t>()(a_));
    mix(std::hash<std::int64_t>()(b_));
    for (auto x : vec_) mix(std::hash<std::int64_t>()(x));
    if (inner_) mix(inner_->hash());
    return h;
  }

 private:
  VTag tag_;
  std::int64_t a_ = 0;
  std::int64_t b_ = 0;
  std::vector<std::int64_t> vec_;
  std::shared_ptr<const VertexId> inner_;
};

struct VertexHash {
  std::size_t operator()(const VertexId& v) const { return v.hash(); }
};

}  // namespace piecewise
