#include <famlies/control.hpp>
#include <famlies/engine.hpp>
#include <famlies/factor.hpp>
#include <famlies/tensor.hpp>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>

namespace py = pybind11;
using namespace famlies;
using control::ControlNode;
using control::Op;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

bool is_f32(const py::array &a) { return a.dtype().is(py::dtype::of<float>()); }

template <class T>
void copy_in(const py::array_t<T, py::array::c_style | py::array::forcecast> &src, T *dst) {
    std::memcpy(dst, src.data(), std::size_t(src.size()) * sizeof(T));
}

MatrixView to_view(const py::array &a) {
    if (a.ndim() != 2)
        throw DimensionError("expected a 2-d array");
    const index_t m = a.shape(0), n = a.shape(1);
    if (is_f32(a)) {
        MatrixView v = make_view(m, n, DType::F32);
        copy_in<float>(F32Array::ensure(a), v.data<float>());
        return v;
    }
    MatrixView v = make_view(m, n, DType::F64);
    copy_in<double>(F64Array::ensure(a), v.data<double>());
    return v;
}

py::array to_numpy(const MatrixView &v) {
    return dispatch(v.dtype(), [&](auto tag) -> py::array {
        using T = decltype(tag);
        py::array_t<T> out({v.rows(), v.cols()});
        T *p = out.mutable_data();
        for (index_t i = 0; i < v.rows(); ++i)
            for (index_t j = 0; j < v.cols(); ++j)
                p[i * v.cols() + j] = v.at<T>(i, j);
        return out;
    });
}

TensorView to_tensor(const py::array &a) {
    std::vector<index_t> dims(a.shape(), a.shape() + a.ndim());
    if (is_f32(a)) {
        TensorView t = make_tensor(dims, DType::F32);
        copy_in<float>(F32Array::ensure(a), t.data<float>());
        return t;
    }
    TensorView t = make_tensor(dims, DType::F64);
    copy_in<double>(F64Array::ensure(a), t.data<double>());
    return t;
}

py::array to_numpy(const TensorView &t) {
    std::vector<py::ssize_t> shape(t.dims().begin(), t.dims().end());
    return dispatch(t.dtype(), [&](auto tag) -> py::array {
        using T = decltype(tag);
        py::array_t<T> out(shape);
        std::memcpy(out.mutable_data(), t.data<T>(), std::size_t(t.size()) * sizeof(T));
        return out;
    });
}

Op op_of(const std::string &name) {
    auto op = control::parse_op(name);
    if (!op)
        throw ConfigError("unknown operation '" + name + "'");
    return *op;
}

ControlNode tree_or_default(const std::optional<std::string> &tree, Op op, index_t n, DType dt) {
    return tree ? control::parse_tree(*tree) : control::default_tree(op, n, dt);
}

py::list pivots(const factor::PivotVector &p) {
    py::list out;
    for (index_t v : p.piv)
        out.append(v);
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dense linear and multilinear algebra driven by control trees";

    static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<AliasingError>(m, "AliasingError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", base.ptr());
    py::register_exception<SingularMatrix>(m, "SingularMatrix", base.ptr());
    py::register_exception<ContractError>(m, "ContractError", base.ptr());
    py::register_exception<control::InvalidControlTree>(m, "InvalidControlTree", base.ptr());

    m.def(
        "gemm",
        [](const py::array &a, const py::array &b, double alpha, double beta,
           std::optional<py::array> c, int ways) {
            MatrixView av = to_view(a), bv = to_view(b);
            MatrixView cv = c ? to_view(*c) : make_view(av.rows(), bv.cols(), av.dtype());
            {
                py::gil_scoped_release nogil;
                engine::gemm(alpha, av, bv, beta, cv, engine::KernelConfig::defaults(av.dtype()),
                             ways);
            }
            return to_numpy(cv);
        },
        py::arg("a"), py::arg("b"), py::arg("alpha") = 1.0, py::arg("beta") = 0.0,
        py::arg("c") = py::none(), py::arg("ways") = 1,
        "alpha*a@b + beta*c through the packed five-loop engine.");

    m.def(
        "cholesky",
        [](const py::array &a, bool upper, std::optional<std::string> tree) {
            MatrixView v = to_view(a);
            factor::cholesky(v, upper ? factor::Uplo::Upper : factor::Uplo::Lower,
                             tree_or_default(tree, Op::Cholesky, v.rows(), v.dtype()));
            MatrixView f = make_view(v.rows(), v.cols(), v.dtype());
            for (index_t i = 0; i < v.rows(); ++i)
                for (index_t j = 0; j < v.cols(); ++j)
                    if (upper ? j >= i : j <= i)
                        f.set(i, j, v.get(i, j));
            return to_numpy(f);
        },
        py::arg("a"), py::arg("upper") = false, py::arg("tree") = py::none(),
        "Cholesky factor (L, or L^T when upper) with the other triangle zeroed.");

    m.def(
        "lu",
        [](const py::array &a, std::optional<std::string> tree) {
            MatrixView v = to_view(a);
            const index_t k = std::min(v.rows(), v.cols());
            factor::LuResult r = factor::lu_partial(v, tree_or_default(tree, Op::LU, k, v.dtype()));
            return py::make_tuple(to_numpy(v), pivots(r.pivots));
        },
        py::arg("a"), py::arg("tree") = py::none(),
        "Packed L\\U factors and LAPACK-style row interchanges.");

    m.def(
        "lu_solve",
        [](const py::array &lu, const std::vector<index_t> &piv, py::array b) {
            MatrixView f = to_view(lu);
            py::array b2 = b.ndim() == 1 ? py::array(b.reshape({b.shape(0), py::ssize_t(1)})) : b;
            MatrixView x = to_view(b2);
            factor::lu_solve(f, factor::PivotVector{piv}, x);
            py::array out = to_numpy(x);
            return b.ndim() == 1 ? py::array(out.reshape({b.shape(0)})) : out;
        },
        py::arg("lu"), py::arg("piv"), py::arg("b"), "Solve A x = b from lu() output.");

    m.def(
        "qr",
        [](const py::array &a, std::optional<std::string> tree) {
            MatrixView v = to_view(a);
            factor::Reflectors refl =
                factor::qr_householder(v, tree_or_default(tree, Op::QR, v.cols(), v.dtype()));
            return py::make_tuple(to_numpy(factor::form_q(v, refl)),
                                  to_numpy(factor::extract_r(v)));
        },
        py::arg("a"), py::arg("tree") = py::none(), "Thin Householder QR: (Q, R).");

    m.def(
        "ltlt",
        [](const py::array &x, std::optional<std::string> tree) {
            MatrixView v = to_view(x);
            factor::LtltResult r =
                factor::ltlt_pivoted(v, tree_or_default(tree, Op::LTLT, v.rows(), v.dtype()));
            return py::make_tuple(to_numpy(factor::ltlt_unpack_l(v)), pivots(r.pivots),
                                  r.tridiag.t);
        },
        py::arg("x"), py::arg("tree") = py::none(),
        "P X P^T = L T L^T for skew-symmetric X: (L, piv, t) with t the subdiagonal of T.");

    m.def(
        "pfaffian",
        [](const py::array &x, std::optional<std::string> tree) {
            MatrixView v = to_view(x);
            return factor::pfaffian(v, tree_or_default(tree, Op::LTLT, v.rows(), v.dtype()));
        },
        py::arg("x"), py::arg("tree") = py::none(), "Pfaffian of a skew-symmetric matrix.");

    m.def(
        "contract",
        [](const std::string &spec, const py::array &a, const py::array &b, bool fold) {
            const auto s = tensor::ContractionSpec::parse(spec);
            TensorView ta = to_tensor(a), tb = to_tensor(b);
            std::vector<index_t> dims;
            for (char l : s.c) {
                auto pa = s.a.find(l);
                dims.push_back(pa != std::string::npos ? ta.dim(int(pa))
                                                       : tb.dim(int(s.b.find(l))));
            }
            TensorView tc = make_tensor(dims, ta.dtype());
            tensor::contract(1.0, ta, tb, 0.0, tc, s, engine::KernelConfig::defaults(ta.dtype()),
                             1, fold);
            return to_numpy(tc);
        },
        py::arg("spec"), py::arg("a"), py::arg("b"), py::arg("fold") = true,
        "Einsum-style contraction such as 'abk,kc->abc'.");

    m.def(
        "default_tree",
        [](const std::string &op, index_t n, const std::string &dtype) {
            return control::serialize(control::default_tree(op_of(op), n, parse_dtype(dtype)));
        },
        py::arg("op"), py::arg("n"), py::arg("dtype") = "f64", "Default control tree as JSON.");

    m.def(
        "enumerate_trees",
        [](const std::string &op, const std::vector<int> &variants,
           const std::vector<index_t> &block_sizes, int depth) {
            std::vector<control::Variant> vs;
            for (int v : variants)
                vs.push_back(control::Variant::blocked_v(v));
            std::vector<std::string> out;
            for (const ControlNode &t : control::enumerate_trees(op_of(op), vs, block_sizes, depth))
                out.push_back(control::serialize(t));
            return out;
        },
        py::arg("op"), py::arg("variants"), py::arg("block_sizes"), py::arg("depth") = 1,
        "Every control tree of the given shape, as JSON strings.");

    m.def(
        "describe", [](const std::string &tree) { return control::describe(control::parse_tree(tree)); },
        py::arg("tree"), "Compact variant/block-size path of a JSON control tree.");
}
