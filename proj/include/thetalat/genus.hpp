#ifndef THETALAT_GENUS_HPP
#define THETALAT_GENUS_HPP

#include <functional>
#include <optional>

#include "thetalat/ffquad.hpp"
#include "thetalat/lattice.hpp"
#include "thetalat/theta.hpp"

namespace thetalat {
namespace genus {

constexpr std::int64_t kDefaultIsometryBudget = std::int64_t(1) << 32;

// p^r-neighbours of L: lattices K with pL <= K <= p^{-1}L, invariant factors
// p^{-1} (r times), 1 (m-2r times), p (r times), even integral, same
// determinant.  One neighbour per pair (totally isotropic r-subspace of
// L/pL, antisymmetric r x r twist mod p).
struct NeighborSet {
    lat::LatticePtr base;
    std::int64_t p = 0;
    int r = 0;
    std::vector<lat::SubframeBasis> members;
};

NeighborSet neighbors(lat::LatticePtr lattice, std::int64_t p, int r,
                      std::int64_t subspace_budget = ffq::kVectorEnumBudget);

// Streaming variant: the callback receives each neighbour without the set
// being materialized.  Every member is validated against the invariants.
void for_each_neighbor(lat::LatticePtr lattice, std::int64_t p, int r,
                       const std::function<void(const lat::SubframeBasis&)>& cb,
                       std::int64_t subspace_budget = ffq::kVectorEnumBudget);

// Count without construction (isotropic subspace count times p^{r(r-1)/2}).
Int neighbor_count(const lat::Lattice& lattice, std::int64_t p, int r);

enum class IsoStatus { Found, NotIsometric, BudgetExhausted };

struct IsometryOutcome {
    IsoStatus status = IsoStatus::NotIsometric;
    // witness g with g^T gram1 g = gram2
    std::optional<arith::MatZ> witness;
};

IsometryOutcome is_isometric(const arith::MatZ& gram1, const arith::MatZ& gram2,
                             std::int64_t node_budget = kDefaultIsometryBudget);
IsometryOutcome is_isometric(const lat::Lattice& l1, const lat::Lattice& l2,
                             std::int64_t node_budget = kDefaultIsometryBudget);

// |O(L)|, the order of the integral orthogonal group; exact count by
// backtracking over shells.  Throws CapacityError on budget exhaustion.
Int aut_order(const arith::MatZ& gram, std::int64_t node_budget = kDefaultIsometryBudget,
              int threads = 1);
Int aut_order(const lat::Lattice& lattice, std::int64_t node_budget = kDefaultIsometryBudget,
              int threads = 1);

struct GenusDecomposition {
    lat::LatticePtr seed;
    std::int64_t p = 0;
    std::vector<lat::Lattice> classes;
    std::vector<Int> aut_orders;
    // neighbor_multiplicity[i][j]: p-neighbours of class i isometric to class j
    std::vector<std::vector<Int>> neighbor_multiplicity;
    bool closure_verified = false;

    Rat mass() const;
};

GenusDecomposition genus_classes(lat::LatticePtr seed, std::int64_t p,
                                 std::int64_t isometry_budget = kDefaultIsometryBudget,
                                 std::int64_t subspace_budget = ffq::kVectorEnumBudget);

theta::CoeffTable genus_average_table(const GenusDecomposition& genus, int n,
                                      std::int64_t bound,
                                      std::int64_t node_budget = theta::kDefaultNodeBudget,
                                      int threads = 1);

std::string genus_to_json(const GenusDecomposition& genus);

// Theta tables cached per isometry class; used by the neighbour sweeps where
// isometric lattices repeat.
class ClassTableCache {
public:
    ClassTableCache(int n, std::int64_t bound, std::int64_t node_budget,
                    std::int64_t isometry_budget, int threads = 1)
        : n_(n), bound_(bound), node_budget_(node_budget),
          isometry_budget_(isometry_budget), threads_(threads) {}

    const theta::CoeffTable& table_for(const arith::MatZ& gram);
    size_t classes() const { return reps_.size(); }

private:
    int n_;
    std::int64_t bound_;
    std::int64_t node_budget_;
    std::int64_t isometry_budget_;
    int threads_;
    std::vector<arith::MatZ> reps_;
    std::vector<theta::CoeffTable> tables_;
};

}  // namespace genus
}  // namespace thetalat

#endif
