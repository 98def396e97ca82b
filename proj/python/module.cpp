// Python bindings for the main operations: lattice invariants, theta
// coefficient tables, neighbours, genus enumeration and the Hecke identity
// verification.  Exact values cross the boundary as decimal strings.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "thetalat/hecke.hpp"

namespace py = pybind11;
using namespace thetalat;

namespace {

arith::MatZ gram_from_rows(const std::vector<std::vector<long long>>& rows) {
    int n = static_cast<int>(rows.size());
    arith::MatZ g(n, n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != n)
            throw std::invalid_argument("gram must be square");
        for (int j = 0; j < n; ++j)
            g(i, j) = Int(static_cast<long>(rows[static_cast<size_t>(i)][static_cast<size_t>(j)]));
    }
    return g;
}

theta::TIndex index_from_rows(const std::vector<std::vector<long long>>& rows) {
    arith::MatZ m = gram_from_rows(rows);
    return theta::TIndex(m.rows, m);
}

struct PyLattice {
    lat::LatticePtr ptr;
};

py::dict table_to_dict(const theta::CoeffTable& t) {
    py::dict d;
    for (const auto& [key, val] : t.entries) {
        py::tuple k(static_cast<size_t>(key.n) * key.n);
        size_t idx = 0;
        for (int i = 0; i < key.n; ++i)
            for (int j = 0; j < key.n; ++j) k[idx++] = static_cast<long long>(key.mat(i, j).get_si());
        d[k] = val.get_str();
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_thetalat, m) {
    m.doc() = "exact Siegel theta series and Hecke identity toolkit";

    py::class_<PyLattice>(m, "Lattice")
        .def(py::init([](const std::vector<std::vector<long long>>& gram, const std::string& label) {
                 return PyLattice{std::make_shared<lat::Lattice>(gram_from_rows(gram), label)};
             }),
             py::arg("gram"), py::arg("label") = "")
        .def_static("from_json",
                    [](const std::string& text) {
                        return PyLattice{std::make_shared<lat::Lattice>(lat::lattice_from_json(text))};
                    })
        .def_static("from_file",
                    [](const std::string& path) {
                        return PyLattice{
                            std::make_shared<lat::Lattice>(lat::lattice_from_json_file(path))};
                    })
        .def_property_readonly("rank", [](const PyLattice& l) { return l.ptr->rank(); })
        .def_property_readonly("k", [](const PyLattice& l) { return l.ptr->k(); })
        .def_property_readonly("label", [](const PyLattice& l) { return l.ptr->label(); })
        .def_property_readonly("det", [](const PyLattice& l) { return l.ptr->det().get_str(); })
        .def_property_readonly("level", [](const PyLattice& l) { return l.ptr->level().get_str(); })
        .def("chi_star", [](const PyLattice& l, long long p) { return l.ptr->chi_star(p); })
        .def("good_prime", [](const PyLattice& l, long long p) { return l.ptr->good_prime(p); });

    m.def("kronecker",
          [](long long a, long long b) { return arith::kronecker(Int(static_cast<long>(a)), Int(static_cast<long>(b))); });
    m.def("beta", [](long long q, long long r, long long a) { return arith::beta(q, r, a).get_str(); });
    m.def("delta", [](long long q, long long mm, long long r) { return arith::delta(q, mm, r).get_str(); });
    m.def("mu", [](long long q, long long mm, long long r) { return arith::mu(q, mm, r).get_str(); });
    m.def("eta", [](long long q, long long r, long long a) { return arith::eta(q, r, a).get_str(); });
    m.def("lambda_j", [](long long q, long long k, long long n, long long j, int chi) {
        return arith::lambda_j(q, k, n, j, chi).get_str();
    });

    m.def("rep_number",
          [](const PyLattice& l, const std::vector<std::vector<long long>>& t) {
              return theta::rep_number(*l.ptr, index_from_rows(t)).get_str();
          });
    m.def("theta_table",
          [](const PyLattice& l, int n, long long bound, int threads) {
              return table_to_dict(theta::theta_table(*l.ptr, n, bound,
                                                      theta::kDefaultNodeBudget, threads));
          },
          py::arg("lattice"), py::arg("n"), py::arg("bound"), py::arg("threads") = 1);

    m.def("neighbor_count", [](const PyLattice& l, long long p, int r) {
        return genus::neighbor_count(*l.ptr, p, r).get_str();
    });
    m.def("neighbor_grams", [](const PyLattice& l, long long p, int r) {
        genus::NeighborSet set = genus::neighbors(l.ptr, p, r);
        std::vector<std::vector<std::vector<long long>>> out;
        for (const auto& k : set.members) {
            auto g = arith::to_integral(k.gram_of());
            std::vector<std::vector<long long>> rows(static_cast<size_t>(g.rows));
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) rows[static_cast<size_t>(i)].push_back(g(i, j).get_si());
            out.push_back(rows);
        }
        return out;
    });
    m.def("aut_order", [](const PyLattice& l, int threads) {
        return genus::aut_order(*l.ptr, genus::kDefaultIsometryBudget, threads).get_str();
    }, py::arg("lattice"), py::arg("threads") = 1);
    m.def("is_isometric", [](const PyLattice& a, const PyLattice& b) {
        auto iso = genus::is_isometric(*a.ptr, *b.ptr);
        if (iso.status == genus::IsoStatus::BudgetExhausted)
            throw std::runtime_error("isometry budget exhausted");
        return iso.status == genus::IsoStatus::Found;
    });
    m.def("genus_json", [](const PyLattice& l, long long p) {
        return genus::genus_to_json(genus::genus_classes(l.ptr, p));
    });

    m.def("ttilde_coefficient",
          [](const PyLattice& l, long long p, int n, int j,
             const std::vector<std::vector<long long>>& t) {
              return hecke::ttilde_coefficient(*l.ptr, p, n, j, index_from_rows(t)).get_str();
          });
    m.def("verify_eigenvalue_json",
          [](const PyLattice& l, long long p, int n, int j, long long bound, int threads) {
              hecke::VerifyOptions opt;
              opt.threads = threads;
              return hecke::verify_eigenvalue(l.ptr, p, n, j, bound, opt).to_json();
          },
          py::arg("lattice"), py::arg("p"), py::arg("n"), py::arg("j"), py::arg("bound"),
          py::arg("threads") = 1);
    m.def("thm45_closing_identity_check",
          [](long long q, const std::vector<std::vector<long long>>& gram, int n, int j, int r) {
              auto space = ffq::FFQuadSpace::from_even_gram(gram_from_rows(gram), q);
              return ffq::thm45_closing_identity_check(space, n, j, r);
          });
}
