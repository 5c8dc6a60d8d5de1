#pragma once

#include <array>
#include <concepts>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rpss {

// Array sizes are capped so N! stays exact in 64-bit arithmetic with headroom
// (12! < 2^32) and desk-scale experiments stay tractable.
inline constexpr int kMinN = 2;
inline constexpr int kMaxN = 12;

constexpr std::uint64_t factorial(int n) {
    std::uint64_t f = 1;
    for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
    return f;
}

// Source of unbiased bounded integer draws; LcgState satisfies this, and tests
// substitute scripted sources.
template <typename S>
concept BoundedIntSource = requires(S s, std::uint64_t b) {
    { s.next_bounded(b) } -> std::convertible_to<std::uint64_t>;
};

// Bijection on {0..N-1}. Inline storage: permutations are value types with no
// heap traffic in the sorting loop.
class Permutation {
public:
    Permutation(std::initializer_list<int> mapping)
        : Permutation(std::vector<int>(mapping)) {}

    explicit Permutation(const std::vector<int>& mapping) {
        if (mapping.size() < static_cast<std::size_t>(kMinN) ||
            mapping.size() > static_cast<std::size_t>(kMaxN)) {
            throw std::invalid_argument("Permutation: size must be in [2, 12]");
        }
        n_ = static_cast<std::uint8_t>(mapping.size());
        std::uint16_t seen = 0;
        for (int i = 0; i < n_; ++i) {
            const int v = mapping[static_cast<std::size_t>(i)];
            if (v < 0 || v >= n_ || (seen & (1u << v))) {
                throw std::invalid_argument("Permutation: mapping is not a bijection on [0, N)");
            }
            seen = static_cast<std::uint16_t>(seen | (1u << v));
            map_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
        }
    }

    static Permutation identity(int n) {
        if (n < kMinN || n > kMaxN) throw std::invalid_argument("identity: size must be in [2, 12]");
        Permutation p;
        p.n_ = static_cast<std::uint8_t>(n);
        for (int i = 0; i < n; ++i) p.map_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
        return p;
    }

    int size() const { return n_; }
    std::uint8_t operator[](int i) const { return map_[static_cast<std::size_t>(i)]; }

    friend bool operator==(const Permutation& a, const Permutation& b) {
        if (a.n_ != b.n_) return false;
        for (int i = 0; i < a.n_; ++i) {
            if (a.map_[static_cast<std::size_t>(i)] != b.map_[static_cast<std::size_t>(i)]) return false;
        }
        return true;
    }

    template <BoundedIntSource S>
    friend Permutation random_permutation(int n, S& source);
    friend Permutation compose(const Permutation& p, const Permutation& q);
    friend Permutation inverse(const Permutation& p);

private:
    Permutation() = default;

    std::array<std::uint8_t, kMaxN> map_{};
    std::uint8_t n_ = 0;
};

// Integer array the engine tries to sort. Values must be pairwise distinct,
// otherwise the sorting permutation is not unique and the success law changes.
class DataArray {
public:
    DataArray(std::initializer_list<int> values)
        : DataArray(std::vector<int>(values)) {}

    explicit DataArray(const std::vector<int>& values) {
        if (values.size() < static_cast<std::size_t>(kMinN) ||
            values.size() > static_cast<std::size_t>(kMaxN)) {
            throw std::invalid_argument("DataArray: size must be in [2, 12]");
        }
        n_ = static_cast<std::uint8_t>(values.size());
        for (int i = 0; i < n_; ++i) {
            vals_[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < n_; ++i) {
            for (int j = i + 1; j < n_; ++j) {
                if (vals_[static_cast<std::size_t>(i)] == vals_[static_cast<std::size_t>(j)]) {
                    throw std::invalid_argument("DataArray: values must be pairwise distinct");
                }
            }
        }
    }

    int size() const { return n_; }
    std::int32_t operator[](int i) const { return vals_[static_cast<std::size_t>(i)]; }

    std::vector<int> values() const {
        return std::vector<int>(vals_.begin(), vals_.begin() + n_);
    }

    friend bool operator==(const DataArray& a, const DataArray& b) {
        if (a.n_ != b.n_) return false;
        for (int i = 0; i < a.n_; ++i) {
            if (a.vals_[static_cast<std::size_t>(i)] != b.vals_[static_cast<std::size_t>(i)]) return false;
        }
        return true;
    }

    friend DataArray apply(const Permutation& p, const DataArray& a);

private:
    DataArray() = default;

    std::array<std::int32_t, kMaxN> vals_{};
    std::uint8_t n_ = 0;
};

// Product convention: result[i] = p[q[i]], so compose(p, q) acting on an array
// equals "apply p, then q". compose(p, identity) = p.
inline Permutation compose(const Permutation& p, const Permutation& q) {
    if (p.size() != q.size()) throw std::invalid_argument("compose: size mismatch");
    Permutation r;
    r.n_ = static_cast<std::uint8_t>(p.size());
    for (int i = 0; i < r.n_; ++i) {
        r.map_[static_cast<std::size_t>(i)] = p.map_[q.map_[static_cast<std::size_t>(i)]];
    }
    return r;
}

inline Permutation inverse(const Permutation& p) {
    Permutation r;
    r.n_ = static_cast<std::uint8_t>(p.size());
    for (int i = 0; i < r.n_; ++i) {
        r.map_[p.map_[static_cast<std::size_t>(i)]] = static_cast<std::uint8_t>(i);
    }
    return r;
}

// Position gather: result[i] = a[p[i]].
inline DataArray apply(const Permutation& p, const DataArray& a) {
    if (p.size() != a.size()) throw std::invalid_argument("apply: size mismatch");
    DataArray r;
    r.n_ = static_cast<std::uint8_t>(a.size());
    for (int i = 0; i < r.n_; ++i) {
        r.vals_[static_cast<std::size_t>(i)] = a[p[i]];
    }
    return r;
}

// Success predicate of a sorting cycle: strictly ascending values.
inline bool is_sorted(const DataArray& a) {
    for (int i = 1; i < a.size(); ++i) {
        if (a[i - 1] >= a[i]) return false;
    }
    return true;
}

// Fisher-Yates, descending index, one rejection-sampled bounded draw per step.
// The draw order is part of the contract: i runs from n-1 down to 1 and swaps
// with j = source.next_bounded(i + 1), so scripted sources replay identically.
// With an unbiased source every one of the N! permutations has probability
// exactly 1/N!.
template <BoundedIntSource S>
Permutation random_permutation(int n, S& source) {
    Permutation p = Permutation::identity(n);
    for (int i = n - 1; i >= 1; --i) {
        const auto j = static_cast<int>(source.next_bounded(static_cast<std::uint64_t>(i) + 1));
        const std::uint8_t tmp = p.map_[static_cast<std::size_t>(i)];
        p.map_[static_cast<std::size_t>(i)] = p.map_[static_cast<std::size_t>(j)];
        p.map_[static_cast<std::size_t>(j)] = tmp;
    }
    return p;
}

inline std::ostream& operator<<(std::ostream& os, const Permutation& p) {
    os << '[';
    for (int i = 0; i < p.size(); ++i) os << (i ? "," : "") << static_cast<int>(p[i]);
    return os << ']';
}

inline std::ostream& operator<<(std::ostream& os, const DataArray& a) {
    os << '[';
    for (int i = 0; i < a.size(); ++i) os << (i ? "," : "") << a[i];
    return os << ']';
}

}  // namespace rpss
