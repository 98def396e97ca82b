#ifndef THETALAT_THETA_HPP
#define THETALAT_THETA_HPP

#include <map>
#include <string>

#include "thetalat/enumerate.hpp"
#include "thetalat/lattice.hpp"

namespace thetalat {
namespace theta {

// Default search budget for one enumeration call.
constexpr int64_t kDefaultNodeBudget = int64_t(1) << 34;

// Fourier index: an even positive semidefinite n x n integer matrix,
// canonical representative of its GL_n(Z)-class for n <= 2 (sorted diagonal
// for larger diagonal indices).
struct TIndex {
    int n = 0;
    arith::MatZ mat;

    TIndex() = default;
    TIndex(int n_, arith::MatZ m_) : n(n_), mat(std::move(m_)) {}

    Int trace() const;
    bool is_zero() const;
    bool nonsingular() const;
    bool operator<(const TIndex& o) const;
    bool operator==(const TIndex& o) const;
    std::string str() const;
};

// Validates evenness/psd and returns the canonical class representative.
// n = 1: identity; n = 2: Gauss reduction to 0 <= 2b <= a <= c (degenerate
// classes go to diag(t, 0)); n >= 3: diagonal matrices only, sorted.
TIndex canonicalize_T(const TIndex& t);
bool is_even_psd(const arith::MatZ& m);

// Exact coefficient table: canonical TIndex -> rational count.
struct CoeffTable {
    int n = 0;
    Int bound = 0;   // max trace
    std::map<TIndex, Rat> entries;

    Rat at(const TIndex& key) const;
    void add_scaled(const CoeffTable& other, const Rat& c);
    void scale(const Rat& c);
    bool operator==(const CoeffTable& o) const;

    std::string to_csv() const;
    static CoeffTable from_csv(const std::string& text);
    std::string to_json() const;
    static CoeffTable from_json(const std::string& text);
};

// Number of integer m x n matrices U with U^T G U = T.mat; exact.
Int rep_number(const arith::MatZ& gram, const TIndex& t,
               int64_t node_budget = kDefaultNodeBudget);
Int rep_number(const lat::Lattice& lattice, const TIndex& t,
               int64_t node_budget = kDefaultNodeBudget);
Int rep_number(const lat::SubframeBasis& basis, const TIndex& t,
               int64_t node_budget = kDefaultNodeBudget);

// All coefficients a(L,T) for canonical T of trace <= bound (degree n <= 2).
CoeffTable theta_table(const arith::MatZ& gram, int n, std::int64_t bound,
                       int64_t node_budget = kDefaultNodeBudget, int threads = 1);
CoeffTable theta_table(const lat::Lattice& lattice, int n, std::int64_t bound,
                       int64_t node_budget = kDefaultNodeBudget, int threads = 1);
CoeffTable theta_table(const lat::SubframeBasis& basis, int n, std::int64_t bound,
                       int64_t node_budget = kDefaultNodeBudget, int threads = 1);

// Shared helper: an LLL-reduced enumeration frame for an even gram matrix.
struct ReducedFrame {
    arith::MatZ gram_red;   // u^T gram u
    arith::MatZ u;          // unimodular
    GramEnumContext ctx;

    explicit ReducedFrame(const arith::MatZ& gram) : ReducedFrame(arith::lll_reduce_gram(gram)) {}

private:
    explicit ReducedFrame(arith::LLLResult r)
        : gram_red(std::move(r.gram)), u(std::move(r.u)), ctx(gram_red) {}
};

// All vectors of a given exact norm, reported in the ORIGINAL frame.
std::vector<std::vector<int64_t>> shell_vectors(const arith::MatZ& gram, std::int64_t norm,
                                                int64_t node_budget = kDefaultNodeBudget);

}  // namespace theta
}  // namespace thetalat

#endif
