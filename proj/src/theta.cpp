#include "thetalat/theta.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace thetalat {
namespace theta {

using arith::MatQ;
using arith::MatZ;

Int TIndex::trace() const {
    Int s = 0;
    for (int i = 0; i < n; ++i) s += mat(i, i);
    return s;
}

bool TIndex::is_zero() const {
    for (const auto& e : mat.a)
        if (e != 0) return false;
    return true;
}

bool TIndex::nonsingular() const { return arith::det(mat) != 0; }

bool TIndex::operator<(const TIndex& o) const {
    if (n != o.n) return n < o.n;
    Int t1 = trace(), t2 = o.trace();
    if (t1 != t2) return t1 < t2;
    for (size_t i = 0; i < mat.a.size(); ++i)
        if (mat.a[i] != o.mat.a[i]) return mat.a[i] < o.mat.a[i];
    return false;
}

bool TIndex::operator==(const TIndex& o) const { return n == o.n && mat == o.mat; }

std::string TIndex::str() const { return arith::mat_str(mat); }

bool is_even_psd(const MatZ& m) {
    if (!arith::is_symmetric(m) || !arith::has_even_diagonal(m)) return false;
    // Symmetric psd iff every principal minor is >= 0.
    int n = m.rows;
    for (int mask = 1; mask < (1 << n); ++mask) {
        std::vector<int> idx;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) idx.push_back(i);
        MatZ sub(static_cast<int>(idx.size()), static_cast<int>(idx.size()));
        for (size_t a = 0; a < idx.size(); ++a)
            for (size_t b = 0; b < idx.size(); ++b)
                sub(static_cast<int>(a), static_cast<int>(b)) = m(idx[a], idx[b]);
        if (arith::det(sub) < 0) return false;
    }
    return true;
}

TIndex canonicalize_T(const TIndex& t) {
    if (t.mat.rows != t.n || t.mat.cols != t.n)
        throw std::invalid_argument("canonicalize_T: shape mismatch");
    if (!is_even_psd(t.mat))
        throw std::invalid_argument("canonicalize_T: index must be even positive semidefinite");
    if (t.n == 1) return t;
    if (t.n == 2) {
        Int a = t.mat(0, 0), b = t.mat(0, 1), c = t.mat(1, 1);
        Int det = a * c - b * b;
        if (a == 0 && c == 0) return t;  // zero matrix (psd forces b = 0)
        if (det == 0) {
            // Rank one: reduce to diag(t0, 0) with t0 the minimum nonzero value.
            // A primitive kernel vector (x, y) extends to a unimodular U, and
            // the complementary column carries the value.
            Int kx, ky;
            if (a == 0) { kx = 1; ky = 0; }          // form is c y^2
            else { kx = -b; ky = a; }                // a(ax+by)^2/a^2 ... kernel (b,-a) scaled
            Int g;
            mpz_gcd(g.get_mpz_t(), kx.get_mpz_t(), ky.get_mpz_t());
            kx /= g; ky /= g;
            // complete (u, v) with u*ky - v*kx = 1
            Int u, v, gg;
            mpz_gcdext(gg.get_mpz_t(), u.get_mpz_t(), v.get_mpz_t(), ky.get_mpz_t(), kx.get_mpz_t());
            // gg = u*ky + v*kx = 1
            MatZ tr(2, 2);
            tr(0, 0) = u; tr(1, 0) = -v;
            tr(0, 1) = kx; tr(1, 1) = ky;
            MatZ res = arith::mul(arith::mul(tr.transpose(), t.mat), tr);
            if (res(0, 1) != 0 || res(1, 1) != 0)
                throw std::logic_error("canonicalize_T: degenerate reduction failed");
            return TIndex(2, res);
        }
        // Gauss reduction.
        for (int guard = 0; guard < 10000; ++guard) {
            if (a > c) { std::swap(a, c); }
            // reduce b into (-a/2, a/2]
            if (a != 0) {
                Int twob = 2 * b;
                if (twob > a || twob <= -a) {
                    // b -= round(b/a)*a ; adjust c accordingly: T[e2 -> e2 - r e1]
                    Int r;
                    Int num = twob + a;
                    Int den = 2 * a;
                    mpz_fdiv_q(r.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
                    c = c - 2 * r * b + r * r * a;
                    b = b - r * a;
                    continue;
                }
            }
            if (a > c) continue;
            break;
        }
        if (b < 0) b = -b;
        if (2 * b > a) {  // boundary normalization: 2|b| = a kept with b >= 0 already
            throw std::logic_error("canonicalize_T: Gauss reduction failed");
        }
        MatZ res(2, 2);
        res(0, 0) = a; res(0, 1) = b; res(1, 0) = b; res(1, 1) = c;
        return TIndex(2, res);
    }
    // n >= 3: diagonal matrices only, sorted ascending.
    for (int i = 0; i < t.n; ++i)
        for (int j = 0; j < t.n; ++j)
            if (i != j && t.mat(i, j) != 0)
                throw std::invalid_argument("canonicalize_T: degree >= 3 supports diagonal indices only");
    std::vector<Int> d(static_cast<size_t>(t.n));
    for (int i = 0; i < t.n; ++i) d[static_cast<size_t>(i)] = t.mat(i, i);
    std::sort(d.begin(), d.end());
    MatZ res(t.n, t.n);
    for (int i = 0; i < t.n; ++i) res(i, i) = d[static_cast<size_t>(i)];
    return TIndex(t.n, res);
}

Rat CoeffTable::at(const TIndex& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? Rat(0) : it->second;
}

void CoeffTable::add_scaled(const CoeffTable& other, const Rat& c) {
    if (n != other.n) throw std::invalid_argument("CoeffTable: degree mismatch");
    for (const auto& [key, val] : other.entries) {
        Rat& slot = entries[key];
        slot += c * val;
        slot.canonicalize();
    }
}

void CoeffTable::scale(const Rat& c) {
    for (auto& [key, val] : entries) {
        val *= c;
        val.canonicalize();
    }
}

bool CoeffTable::operator==(const CoeffTable& o) const {
    if (n != o.n) return false;
    // Compare as sparse maps with zero entries ignored.
    auto nonzero = [](const std::map<TIndex, Rat>& m) {
        std::map<TIndex, Rat> r;
        for (const auto& [k, v] : m)
            if (v != 0) r.emplace(k, v);
        return r;
    };
    return nonzero(entries) == nonzero(o.entries);
}

std::string CoeffTable::to_csv() const {
    std::ostringstream os;
    for (const auto& [key, val] : entries) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) os << key.mat(i, j).get_str() << ",";
        os << val.get_num().get_str() << "," << val.get_den().get_str() << "\n";
    }
    return os.str();
}

CoeffTable CoeffTable::from_csv(const std::string& text) {
    CoeffTable table;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    Int maxtrace = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() < 3) throw std::invalid_argument("CoeffTable csv: short row");
        int nn = static_cast<int>(arith::isqrt64(static_cast<int64_t>(cells.size()) - 2));
        if (static_cast<size_t>(nn) * nn + 2 != cells.size())
            throw std::invalid_argument("CoeffTable csv: bad column count");
        if (first) {
            table.n = nn;
            first = false;
        } else if (table.n != nn) {
            throw std::invalid_argument("CoeffTable csv: inconsistent degree");
        }
        MatZ m(nn, nn);
        for (int i = 0; i < nn; ++i)
            for (int j = 0; j < nn; ++j) m(i, j) = Int(cells[static_cast<size_t>(i * nn + j)]);
        TIndex key(nn, m);
        Rat val(Int(cells[cells.size() - 2]), Int(cells[cells.size() - 1]));
        val.canonicalize();
        table.entries[key] = val;
        Int tr = key.trace();
        if (tr > maxtrace) maxtrace = tr;
    }
    table.bound = maxtrace;
    return table;
}

std::string CoeffTable::to_json() const {
    nlohmann::ordered_json j;
    j["n"] = n;
    j["bound"] = bound.get_str();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [key, val] : entries) {
        nlohmann::ordered_json e;
        auto rows = nlohmann::ordered_json::array();
        for (int i = 0; i < n; ++i) {
            auto row = nlohmann::ordered_json::array();
            for (int jj = 0; jj < n; ++jj) row.push_back(key.mat(i, jj).get_str());
            rows.push_back(row);
        }
        e["t"] = rows;
        e["num"] = val.get_num().get_str();
        e["den"] = val.get_den().get_str();
        arr.push_back(e);
    }
    j["entries"] = arr;
    return j.dump(2);
}

CoeffTable CoeffTable::from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    CoeffTable table;
    table.n = j.at("n").get<int>();
    table.bound = Int(j.at("bound").get<std::string>());
    for (const auto& e : j.at("entries")) {
        int nn = table.n;
        MatZ m(nn, nn);
        for (int i = 0; i < nn; ++i)
            for (int jj = 0; jj < nn; ++jj)
                m(i, jj) = Int(e.at("t")[static_cast<size_t>(i)][static_cast<size_t>(jj)].get<std::string>());
        Rat val(Int(e.at("num").get<std::string>()), Int(e.at("den").get<std::string>()));
        val.canonicalize();
        table.entries[TIndex(nn, m)] = val;
    }
    return table;
}

std::vector<std::vector<int64_t>> shell_vectors(const MatZ& gram, std::int64_t norm,
                                                int64_t node_budget) {
    ReducedFrame frame(gram);
    int m = gram.rows;
    std::vector<int64_t> u64(frame.u.a.size());
    for (size_t i = 0; i < frame.u.a.size(); ++i) u64[i] = frame.u.a[i].get_si();
    std::vector<std::vector<int64_t>> out;
    EnumSpec spec;
    spec.target = norm;
    spec.node_budget = node_budget;
    enumerate(frame.ctx, spec, [&](const int32_t* z, int64_t) {
        std::vector<int64_t> x(static_cast<size_t>(m), 0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) x[static_cast<size_t>(i)] += u64[static_cast<size_t>(i) * m + j] * z[j];
        out.push_back(std::move(x));
    });
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

// Integer basis of the joint kernel {x : rows . x = 0} of a k x m integer
// matrix (k may be 0).
MatZ homogeneous_kernel(const MatZ& rows) {
    int k = rows.rows, m = rows.cols;
    if (k == 0) return MatZ::identity(m);
    arith::SmithResult sm = arith::smith(rows);
    std::vector<int> free_cols;
    for (int j = 0; j < m; ++j) {
        bool zero = j >= std::min(k, m) || sm.d[static_cast<size_t>(j)] == 0;
        if (zero) free_cols.push_back(j);
    }
    MatZ kern(m, static_cast<int>(free_cols.size()));
    for (int i = 0; i < m; ++i)
        for (size_t c = 0; c < free_cols.size(); ++c)
            kern(i, static_cast<int>(c)) = sm.v(i, free_cols[c]);
    return kern;
}

// Diagonal probe for degree >= 3: columns are pairwise orthogonal with
// prescribed norms; recurse through kernel sublattices.
Int rep_diag_recurse(const MatZ& gram, const std::vector<Int>& diag, size_t idx,
                     MatZ fixed_rows, int64_t node_budget) {
    if (idx == diag.size()) return 1;
    MatZ kern = homogeneous_kernel(fixed_rows);
    MatZ sub = arith::mul(arith::mul(kern.transpose(), gram), kern);
    if (diag[idx] == 0) {
        // zero column must be the zero vector (positive definite gram)
        return rep_diag_recurse(gram, diag, idx + 1, fixed_rows, node_budget);
    }
    Int total = 0;
    auto shell = shell_vectors(sub, diag[idx].get_si(), node_budget);
    int m = gram.rows;
    for (const auto& y : shell) {
        // column in the original frame
        std::vector<Int> x(static_cast<size_t>(m), 0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < kern.cols; ++j)
                x[static_cast<size_t>(i)] += kern(i, j) * Int(y[static_cast<size_t>(j)]);
        MatZ rows(fixed_rows.rows + 1, m);
        for (int i = 0; i < fixed_rows.rows; ++i)
            for (int j = 0; j < m; ++j) rows(i, j) = fixed_rows(i, j);
        for (int j = 0; j < m; ++j) {
            Int acc = 0;
            for (int i = 0; i < m; ++i) acc += gram(j, i) * x[static_cast<size_t>(i)];
            rows(fixed_rows.rows, j) = acc;
        }
        total += rep_diag_recurse(gram, diag, idx + 1, rows, node_budget);
    }
    return total;
}

Int rep_number_impl(const MatZ& gram, const TIndex& t, int64_t node_budget) {
    if (t.mat.rows != t.n || t.mat.cols != t.n)
        throw std::invalid_argument("rep_number: index shape mismatch");
    if (!is_even_psd(t.mat))
        throw std::invalid_argument("rep_number: index must be even positive semidefinite");
    for (const auto& e : gram.a)
        if (!e.fits_slong_p()) throw std::overflow_error("rep_number: gram entry exceeds int64");
    int n = t.n;
    int m = gram.rows;
    if (n > m && !t.is_zero() && t.nonsingular()) return 0;
    if (n == 0) return 1;

    ReducedFrame frame(gram);
    if (n == 1) {
        EnumSpec spec;
        spec.target = t.mat(0, 0).get_si();
        spec.node_budget = node_budget;
        detail::Noop noop;
        return Int(enumerate(frame.ctx, spec, noop));
    }
    if (n > 2) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && t.mat(i, j) != 0)
                    throw std::invalid_argument("rep_number: degree >= 3 supports diagonal indices only");
        std::vector<Int> diag(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) diag[static_cast<size_t>(i)] = t.mat(i, i);
        return rep_diag_recurse(gram, diag, 0, MatZ(0, m), node_budget);
    }

    // Degree 2: first column over its shell, second by one coset count each.
    // Counting is symmetric under transposing the index, so enumerate the
    // smaller diagonal entry as the outer column.
    std::vector<int64_t> u64(frame.u.a.size());
    for (size_t i = 0; i < frame.u.a.size(); ++i) u64[i] = frame.u.a[i].get_si();
    std::vector<int64_t> g64(gram.a.size());
    for (size_t i = 0; i < gram.a.size(); ++i) g64[i] = gram.a[i].get_si();

    Int total = 0;
    int64_t a = t.mat(0, 0).get_si(), b = t.mat(0, 1).get_si(), c = t.mat(1, 1).get_si();
    if (a > c) std::swap(a, c);
    if (a == 0) {
        // psd forces b = 0; the first column is the zero vector
        EnumSpec s2;
        s2.target = c;
        s2.node_budget = node_budget;
        detail::Noop noop;
        return Int(enumerate(frame.ctx, s2, noop));
    }
    EnumSpec spec;
    spec.target = a;
    spec.node_budget = node_budget;
    enumerate(frame.ctx, spec, [&](const int32_t* z, int64_t) {
        std::vector<int64_t> x(static_cast<size_t>(m), 0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) x[static_cast<size_t>(i)] += u64[static_cast<size_t>(i) * m + j] * z[j];
        std::vector<int64_t> lin(static_cast<size_t>(m), 0);
        for (int i = 0; i < m; ++i) {
            int64_t acc = 0;
            for (int j = 0; j < m; ++j) acc += g64[static_cast<size_t>(i) * m + j] * x[static_cast<size_t>(j)];
            lin[static_cast<size_t>(i)] = acc;
        }
        CosetEnumerator coset(gram, lin, node_budget);
        total += coset.count(b, c);
    });
    return total;
}

}  // namespace

Int rep_number(const MatZ& gram, const TIndex& t, int64_t node_budget) {
    return rep_number_impl(gram, t, node_budget);
}

Int rep_number(const lat::Lattice& lattice, const TIndex& t, int64_t node_budget) {
    return rep_number_impl(lattice.gram(), t, node_budget);
}

Int rep_number(const lat::SubframeBasis& basis, const TIndex& t, int64_t node_budget) {
    MatQ g = basis.gram_of();
    if (!arith::is_integral(g))
        throw std::invalid_argument("rep_number: subframe gram must be integral");
    return rep_number_impl(arith::to_integral(g), t, node_budget);
}

namespace {

struct ShellData {
    std::vector<int32_t> coords;   // packed m per vector, original frame
    std::vector<int64_t> norms;
    int m = 0;
    size_t size() const { return norms.size(); }
};

ShellData collect_shells(const MatZ& gram, int64_t bound, int64_t node_budget) {
    ReducedFrame frame(gram);
    int m = gram.rows;
    std::vector<int64_t> u64(frame.u.a.size());
    for (size_t i = 0; i < frame.u.a.size(); ++i) u64[i] = frame.u.a[i].get_si();
    ShellData data;
    data.m = m;
    EnumSpec spec;
    spec.target = bound;
    spec.upto = true;
    spec.node_budget = node_budget;
    enumerate(frame.ctx, spec, [&](const int32_t* z, int64_t q) {
        for (int i = 0; i < m; ++i) {
            int64_t acc = 0;
            for (int j = 0; j < m; ++j) acc += u64[static_cast<size_t>(i) * m + j] * z[j];
            data.coords.push_back(static_cast<int32_t>(acc));
        }
        data.norms.push_back(q);
    });
    return data;
}

CoeffTable theta_table_impl(const MatZ& gram, int n, std::int64_t bound,
                            int64_t node_budget, int threads) {
    if (n < 1) throw std::invalid_argument("theta_table: degree must be >= 1");
    if (bound < 0) throw std::invalid_argument("theta_table: bound must be >= 0");
    if (n > 2) throw std::invalid_argument("theta_table: degree > 2 not supported");
    CoeffTable table;
    table.n = n;
    table.bound = bound;

    if (n == 1) {
        std::map<int64_t, Int> counts;
        for (int64_t q = 0; q <= bound; q += 2) counts[q] = 0;
        ShellData shells = collect_shells(gram, bound, node_budget);
        for (int64_t q : shells.norms) ++counts[q];
        for (const auto& [q, cnt] : counts) {
            MatZ m1(1, 1);
            m1(0, 0) = q;
            table.entries[TIndex(1, m1)] = Rat(cnt);
        }
        return table;
    }

    // Degree 2: all ordered pairs from the ball of norm <= bound, binned by
    // (q(u), b(u,v), q(v)) through a precomputed canonicalization map.
    ShellData shells = collect_shells(gram, bound, node_budget);
    int m = shells.m;
    size_t cnt = shells.size();
    std::vector<int64_t> g64(gram.a.size());
    for (size_t i = 0; i < gram.a.size(); ++i) g64[i] = gram.a[i].get_si();

    // G v for every shell vector
    std::vector<int64_t> gv(cnt * static_cast<size_t>(m));
    for (size_t v = 0; v < cnt; ++v)
        for (int i = 0; i < m; ++i) {
            int64_t acc = 0;
            for (int j = 0; j < m; ++j)
                acc += g64[static_cast<size_t>(i) * m + j] * shells.coords[v * m + static_cast<size_t>(j)];
            gv[v * static_cast<size_t>(m) + static_cast<size_t>(i)] = acc;
        }

    // Raw (q(u), b, q(v)) bins; a(L,T) is GL-invariant, so the table reads
    // off the raw count at each canonical representative itself.
    const int64_t B = bound;
    std::vector<TIndex> keys;
    {
        std::map<TIndex, bool> seen;
        MatZ t2m(2, 2);
        for (int64_t a = 0; a <= B; a += 2)
            for (int64_t c = 0; a + c <= B; c += 2)
                for (int64_t b = -B; b <= B; ++b) {
                    if (b * b > a * c) continue;
                    t2m(0, 0) = a; t2m(0, 1) = b; t2m(1, 0) = b; t2m(1, 1) = c;
                    TIndex canon = canonicalize_T(TIndex(2, t2m));
                    if (!seen[canon]) {
                        seen[canon] = true;
                        keys.push_back(canon);
                    }
                }
    }
    auto bin_slot = [&](int64_t a, int64_t b, int64_t c) -> size_t {
        return static_cast<size_t>((a * (2 * B + 1) + (b + B)) * (B + 1) + c);
    };
    size_t nbins = static_cast<size_t>((B + 1) * (2 * B + 1) * (B + 1));

    int nthreads = std::max(1, threads);
    std::vector<std::vector<int64_t>> partial(static_cast<size_t>(nthreads),
                                              std::vector<int64_t>(nbins, 0));
    auto work = [&](int tid) {
        auto& acc = partial[static_cast<size_t>(tid)];
        for (size_t uidx = static_cast<size_t>(tid); uidx < cnt; uidx += static_cast<size_t>(nthreads)) {
            int64_t qu = shells.norms[uidx];
            const int32_t* uc = &shells.coords[uidx * static_cast<size_t>(m)];
            for (size_t vidx = 0; vidx < cnt; ++vidx) {
                int64_t qv = shells.norms[vidx];
                if (qu + qv > B) continue;
                const int64_t* gvv = &gv[vidx * static_cast<size_t>(m)];
                int64_t b = 0;
                for (int i = 0; i < m; ++i) b += static_cast<int64_t>(uc[i]) * gvv[i];
                ++acc[bin_slot(qu, b, qv)];
            }
        }
    };
    if (nthreads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int tidx = 0; tidx < nthreads; ++tidx) pool.emplace_back(work, tidx);
        for (auto& th : pool) th.join();
    }
    for (const TIndex& key : keys) {
        size_t slot = bin_slot(key.mat(0, 0).get_si(), key.mat(0, 1).get_si(),
                               key.mat(1, 1).get_si());
        Int total = 0;
        for (int tid = 0; tid < nthreads; ++tid) total += partial[static_cast<size_t>(tid)][slot];
        table.entries[key] = Rat(total);
    }
    return table;
}

}  // namespace

CoeffTable theta_table(const MatZ& gram, int n, std::int64_t bound, int64_t node_budget,
                       int threads) {
    return theta_table_impl(gram, n, bound, node_budget, threads);
}

CoeffTable theta_table(const lat::Lattice& lattice, int n, std::int64_t bound,
                       int64_t node_budget, int threads) {
    return theta_table_impl(lattice.gram(), n, bound, node_budget, threads);
}

CoeffTable theta_table(const lat::SubframeBasis& basis, int n, std::int64_t bound,
                       int64_t node_budget, int threads) {
    MatQ g = basis.gram_of();
    if (!arith::is_integral(g))
        throw std::invalid_argument("theta_table: subframe gram must be integral");
    return theta_table_impl(arith::to_integral(g), n, bound, node_budget, threads);
}

}  // namespace theta
}  // namespace thetalat
