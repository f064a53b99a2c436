#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

namespace uqct {

// One spatial level plus a growable vector of per-dimension quadrature
// levels. Trailing zeros in ly are not stored, which realizes the embedding
// into the infinite-dimensional index space: equality and hashing are
// insensitive to appended zero levels.
struct MultiIndex {
    int lx = 0;
    std::vector<int> ly;

    MultiIndex() = default;
    MultiIndex(int lx_, std::vector<int> ly_) : lx(lx_), ly(std::move(ly_)) { trim(); }

    void trim() {
        while (!ly.empty() && ly.back() == 0) ly.pop_back();
    }

    // coord 0 = spatial, coord k >= 1 = parametric dimension k
    int level(int coord) const {
        if (coord == 0) return lx;
        return coord <= int(ly.size()) ? ly[coord - 1] : 0;
    }

    MultiIndex bumped(int coord, int delta) const {
        MultiIndex out = *this;
        if (coord == 0) {
            out.lx += delta;
        } else {
            if (coord > int(out.ly.size())) out.ly.resize(coord, 0);
            out.ly[coord - 1] += delta;
        }
        out.trim();
        return out;
    }

    // max{k : ly_k >= 1}, 0 if none
    int effective_truncation() const { return int(ly.size()); }

    // number of coordinates (incl. spatial) that are >= 1
    int spanned_coords() const { return 1 + effective_truncation(); }

    bool operator==(const MultiIndex& o) const { return lx == o.lx && ly == o.ly; }

    // lexicographic on (lx, ly...), used for deterministic tie-breaking
    bool lex_less(const MultiIndex& o) const {
        if (lx != o.lx) return lx < o.lx;
        const size_t n = std::max(ly.size(), o.ly.size());
        for (size_t k = 0; k < n; ++k) {
            const int a = k < ly.size() ? ly[k] : 0;
            const int b = k < o.ly.size() ? o.ly[k] : 0;
            if (a != b) return a < b;
        }
        return false;
    }

    std::string str() const {
        std::string s = "[" + std::to_string(lx);
        for (int l : ly) s += "," + std::to_string(l);
        return s + "]";
    }
};

struct MultiIndexHash {
    size_t operator()(const MultiIndex& idx) const {
        size_t h = std::hash<int>()(idx.lx);
        for (int l : idx.ly) h = h * 1000003u + size_t(l) + 0x9e3779b9u;
        return h;
    }
};

using IndexSet = std::unordered_set<MultiIndex, MultiIndexHash>;

// true iff every backward coordinate neighbor of every member is present.
bool is_downward_closed(const IndexSet& set);

}  // namespace uqct
