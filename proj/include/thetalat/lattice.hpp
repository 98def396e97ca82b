#ifndef THETALAT_LATTICE_HPP
#define THETALAT_LATTICE_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "thetalat/mat.hpp"

namespace thetalat {
namespace lat {

// Full-rank even positive definite lattice over Z, given by its Gram matrix.
// The rank must be even (m = 2k); construction rejects anything else with a
// diagnostic naming the violated invariant.
class Lattice {
public:
    explicit Lattice(arith::MatZ gram, std::string label = "");

    int rank() const { return gram_.rows; }
    int k() const { return gram_.rows / 2; }
    const arith::MatZ& gram() const { return gram_; }
    const Int& det() const { return det_; }
    const Int& level() const { return level_; }
    const std::string& label() const { return label_; }

    bool good_prime(std::int64_t p) const;
    // chi*_L(p) = kronecker((-1)^k det Q, p); defined only for p not dividing
    // the level.
    int chi_star(std::int64_t p) const;

private:
    arith::MatZ gram_;
    std::string label_;
    Int det_;
    Int level_;
};

using LatticePtr = std::shared_ptr<const Lattice>;

// A tuple of r column vectors inside the rational span of a parent lattice,
// with denominators restricted to powers of a context prime.  Canonical under
// right multiplication by GL_r(Z) via column Hermite normal form.
class SubframeBasis {
public:
    SubframeBasis(LatticePtr parent, const arith::MatQ& cols);

    const Lattice& parent() const { return *parent_; }
    LatticePtr parent_ptr() const { return parent_; }
    const arith::MatQ& cols() const { return cols_; }
    int rank() const { return cols_.cols; }

    arith::MatQ gram_of() const;
    bool is_even_integral() const;
    // Multiplicity of each invariant-factor exponent e (factor p^e) of the
    // transition matrix; requires full rank = parent rank.
    std::map<int, int> invariant_mults(std::int64_t p) const;

    bool operator==(const SubframeBasis& o) const { return cols_ == o.cols_; }

private:
    LatticePtr parent_;
    arith::MatQ cols_;  // canonical HNF representative
};

SubframeBasis dual(LatticePtr lattice);

// Rebase a full-rank even integral subframe as a Lattice in its own frame.
Lattice lattice_from_subframe(const SubframeBasis& basis, const std::string& label = "");

// Level of an even positive definite gram matrix (least N with N Q^{-1}
// even integral), cross-checked against 4(norm L . norm L#)^{-1}.
Int even_lattice_level(const arith::MatZ& gram);

Lattice lattice_from_json(const std::string& json_text);
Lattice lattice_from_json_file(const std::string& path);
std::string lattice_to_json(const Lattice& lattice);

}  // namespace lat
}  // namespace thetalat

#endif
