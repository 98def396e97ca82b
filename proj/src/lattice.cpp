#include "thetalat/lattice.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace thetalat {
namespace lat {

using arith::MatQ;
using arith::MatZ;

namespace {

// The fractional ideal generated by the values q(x) = x^T G x of an exact
// symmetric rational matrix: gcd of the diagonal and of twice the
// off-diagonal entries, as a nonnegative rational.
Rat norm_ideal(const MatQ& g) {
    Int den = 1;
    for (const auto& x : g.a) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), x.get_den_mpz_t());
    Int acc = 0;
    for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) {
            Rat scaled = g(i, j) * Rat(den);
            Int v = scaled.get_num();
            if (i != j) v *= 2;
            mpz_gcd(acc.get_mpz_t(), acc.get_mpz_t(), v.get_mpz_t());
        }
    Rat r(acc, den);
    r.canonicalize();
    return r;
}

Int compute_level(const MatZ& gram, const Int& detg) {
    // Least N > 0 with N * gram^{-1} even integral: with A the adjugate,
    // N * A_ij / det must be integral and N * A_ii / det even.
    int n = gram.rows;
    MatQ inv = arith::inverse(arith::to_rational(gram));
    Int level = 1;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Rat e = inv(i, j);
            Int d = e.get_den();
            if (i == j) {
                Rat h = e / 2;
                h.canonicalize();
                d = h.get_den();
            }
            mpz_lcm(level.get_mpz_t(), level.get_mpz_t(), d.get_mpz_t());
        }
    // Cross-check against the ideal formula N = 4 (norm L . norm L#)^{-1}.
    Rat norm_l = norm_ideal(arith::to_rational(gram));
    Rat norm_dual = norm_ideal(inv);
    Rat formula = Rat(4) / (norm_l * norm_dual);
    formula.canonicalize();
    if (formula.get_den() != 1 || formula.get_num() != level)
        throw std::logic_error("level: classical criterion disagrees with the ideal formula 4(norm L . norm L#)^{-1}");
    (void)detg;
    return level;
}

}  // namespace

Int even_lattice_level(const MatZ& gram) { return compute_level(gram, arith::det(gram)); }

Lattice::Lattice(MatZ gram, std::string label)
    : gram_(std::move(gram)), label_(std::move(label)) {
    if (gram_.rows != gram_.cols)
        throw std::invalid_argument("lattice: gram must be square");
    if (gram_.rows == 0)
        throw std::invalid_argument("lattice: gram must be nonempty");
    if (gram_.rows % 2 != 0)
        throw std::invalid_argument("lattice: m must be even (m = 2k)");
    if (!arith::is_symmetric(gram_))
        throw std::invalid_argument("lattice: gram is not symmetric");
    if (!arith::has_even_diagonal(gram_))
        throw std::invalid_argument("lattice: gram diagonal is not even (lattice not even)");
    if (!arith::is_positive_definite(gram_))
        throw std::invalid_argument("lattice: gram is not positive definite");
    det_ = arith::det(gram_);
    level_ = compute_level(gram_, det_);
}

bool Lattice::good_prime(std::int64_t p) const {
    return !mpz_divisible_ui_p(level_.get_mpz_t(), static_cast<unsigned long>(p));
}

int Lattice::chi_star(std::int64_t p) const {
    if (!arith::is_prime(p)) throw std::invalid_argument("chi_star: p must be prime");
    if (!good_prime(p))
        throw std::domain_error("chi_star: character undefined at primes dividing the level");
    Int arg = det_;
    if (k() % 2 == 1) arg = -arg;
    return arith::kronecker(arg, Int(p));
}

SubframeBasis::SubframeBasis(LatticePtr parent, const MatQ& cols)
    : parent_(std::move(parent)) {
    if (!parent_) throw std::invalid_argument("subframe: null parent");
    if (cols.rows != parent_->rank())
        throw std::invalid_argument("subframe: column height must match parent rank");
    cols_ = arith::hnf_col(cols);  // canonical basis of the span
    if (cols_.cols < 1 || cols_.cols > cols_.rows)
        throw std::invalid_argument("subframe: bad span rank");
}

MatQ SubframeBasis::gram_of() const {
    MatQ g = arith::mul(arith::mul(cols_.transpose(), arith::to_rational(parent_->gram())), cols_);
    for (auto& x : g.a) x.canonicalize();
    return g;
}

bool SubframeBasis::is_even_integral() const {
    MatQ g = gram_of();
    if (!arith::is_integral(g)) return false;
    for (int i = 0; i < g.rows; ++i)
        if (mpz_odd_p(g(i, i).get_num_mpz_t())) return false;
    return true;
}

std::map<int, int> SubframeBasis::invariant_mults(std::int64_t p) const {
    if (cols_.cols != parent_->rank())
        throw std::invalid_argument("invariant_mults: full-rank subframe required");
    std::vector<int> vals = arith::snf_valuations(cols_, p);
    std::map<int, int> mults;
    for (int v : vals) ++mults[v];
    return mults;
}

SubframeBasis dual(LatticePtr lattice) {
    MatQ inv = arith::inverse(arith::to_rational(lattice->gram()));
    return SubframeBasis(lattice, inv);
}

Lattice lattice_from_subframe(const SubframeBasis& basis, const std::string& label) {
    MatQ g = basis.gram_of();
    if (!arith::is_integral(g))
        throw std::domain_error("lattice_from_subframe: subframe gram is not integral");
    return Lattice(arith::to_integral(g), label);
}

Lattice lattice_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("lattice file: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("gram"))
        throw std::invalid_argument("lattice file: missing field 'gram'");
    if (!j["gram"].is_array())
        throw std::invalid_argument("lattice file: field 'gram' must be an array of rows");
    std::string label = j.value("label", "");
    auto rows = j["gram"];
    int n = static_cast<int>(rows.size());
    MatZ gram(n, n);
    for (int i = 0; i < n; ++i) {
        if (!rows[static_cast<size_t>(i)].is_array() ||
            static_cast<int>(rows[static_cast<size_t>(i)].size()) != n)
            throw std::invalid_argument("lattice file: field 'gram' must be a square matrix");
        for (int jj = 0; jj < n; ++jj) {
            const auto& cell = rows[static_cast<size_t>(i)][static_cast<size_t>(jj)];
            if (!cell.is_number_integer())
                throw std::invalid_argument("lattice file: gram entries must be integers");
            gram(i, jj) = Int(static_cast<long>(cell.get<long long>()));
        }
    }
    return Lattice(std::move(gram), label);
}

Lattice lattice_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("lattice file: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return lattice_from_json(ss.str());
}

std::string lattice_to_json(const Lattice& lattice) {
    nlohmann::ordered_json j;
    j["label"] = lattice.label();
    auto rows = nlohmann::ordered_json::array();
    for (int i = 0; i < lattice.rank(); ++i) {
        auto row = nlohmann::ordered_json::array();
        for (int jj = 0; jj < lattice.rank(); ++jj)
            row.push_back(lattice.gram()(i, jj).get_si());
        rows.push_back(row);
    }
    j["gram"] = rows;
    return j.dump(2);
}

}  // namespace lat
}  // namespace thetalat
