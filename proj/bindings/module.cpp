#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sslchrono/cohort.hpp"
#include "sslchrono/eval.hpp"
#include "sslchrono/model.hpp"
#include "sslchrono/tensor.hpp"
#include "sslchrono/train.hpp"

namespace py = pybind11;
using namespace sslchrono;

namespace {

Tensor make_tensor(const std::vector<int64_t>& shape, const std::vector<float>& data,
                   bool requires_grad) {
    return Tensor::from(Shape(shape.begin(), shape.end()), std::vector<float>(data), requires_grad);
}

std::vector<float> tensor_values(const Tensor& t) {
    auto v = t.data();
    return {v.begin(), v.end()};
}

std::vector<float> tensor_grad(const Tensor& t) {
    if (!t.has_grad()) throw py::value_error("tensor has no gradient; run Tape.backward first");
    auto g = t.grad();
    return {g.begin(), g.end()};
}

// Cohort rows in dataset-CSV column order:
// participant_id, day, rhr, tib, cal, rhr_missing, tib_missing, cal_missing, ili_positive
py::array_t<double> cohort_rows(const CohortParams& params) {
    auto cohort = generate_cohort(params);
    int64_t rows = 0;
    for (const auto& s : cohort) rows += static_cast<int64_t>(s.days.size());
    py::array_t<double> out({rows, static_cast<int64_t>(9)});
    auto a = out.mutable_unchecked<2>();
    int64_t r = 0;
    for (const auto& s : cohort)
        for (size_t d = 0; d < s.days.size(); ++d, ++r) {
            const DayRecord& rec = s.days[d];
            a(r, 0) = s.participant_id;
            a(r, 1) = static_cast<double>(d);
            a(r, 2) = rec.rhr;
            a(r, 3) = rec.tib;
            a(r, 4) = rec.cal;
            a(r, 5) = rec.rhr_missing;
            a(r, 6) = rec.tib_missing;
            a(r, 7) = rec.cal_missing;
            a(r, 8) = rec.ili_positive;
        }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Core operations: autodiff tensors, the sequence model, synthetic cohorts and "
              "ranking metrics";

    py::register_exception<Error>(m, "SslchronoError");

    py::enum_<Mode>(m, "Mode").value("TRAIN", Mode::kTrain).value("EVAL", Mode::kEval);

    py::class_<Rng>(m, "Rng")
        .def(py::init<uint64_t>(), py::arg("seed"))
        .def("uniform", [](Rng& r) { return r.uniform(); })
        .def("normal", [](Rng& r) { return r.normal(); });

    py::class_<Tensor>(m, "Tensor")
        .def(py::init(&make_tensor), py::arg("shape"), py::arg("data"),
             py::arg("requires_grad") = false)
        .def_property_readonly("shape", [](const Tensor& t) { return t.shape(); })
        .def_property_readonly("values", &tensor_values)
        .def_property_readonly("grad", &tensor_grad)
        .def_property_readonly("requires_grad", &Tensor::requires_grad)
        .def("item", &Tensor::item);

    py::class_<Tape>(m, "Tape")
        .def(py::init<>())
        .def("backward", &Tape::backward, py::arg("loss"))
        .def_property_readonly("node_count", &Tape::node_count);

    m.def("matmul", &matmul<float>, py::arg("tape"), py::arg("a"), py::arg("b"));
    m.def("add", &add<float>, py::arg("tape"), py::arg("a"), py::arg("b"));
    m.def("mul", &mul<float>, py::arg("tape"), py::arg("a"), py::arg("b"));
    m.def("relu", &relu<float>, py::arg("tape"), py::arg("x"));
    m.def("softmax", &softmax<float>, py::arg("tape"), py::arg("x"), py::arg("axis") = -1);
    m.def("layer_norm", &layer_norm<float>, py::arg("tape"), py::arg("x"), py::arg("gamma"),
          py::arg("beta"), py::arg("eps") = 1e-5f);
    m.def("sum", &sum<float>, py::arg("tape"), py::arg("x"));
    m.def("mse_loss", &mse_loss<float>, py::arg("tape"), py::arg("pred"), py::arg("target"));
    m.def("cross_entropy_loss", &cross_entropy_loss<float>, py::arg("tape"), py::arg("logits"),
          py::arg("labels"));

    m.def("cosine_lr", &cosine_lr, py::arg("step"), py::arg("total_steps"), py::arg("lr0"));

    m.def(
        "auc",
        [](const std::vector<float>& scores, const std::vector<int>& labels) {
            ScoredSet s;
            s.scores = scores;
            s.labels = labels;
            return auc(s);
        },
        py::arg("scores"), py::arg("labels"));

    py::class_<CohortParams>(m, "CohortParams")
        .def(py::init<>())
        .def_readwrite("n_participants", &CohortParams::n_participants)
        .def_readwrite("horizon_days", &CohortParams::horizon_days)
        .def_readwrite("illness_prevalence", &CohortParams::illness_prevalence)
        .def_readwrite("base_missing_rate", &CohortParams::base_missing_rate)
        .def_readwrite("illness_missing_boost", &CohortParams::illness_missing_boost)
        .def_readwrite("seed", &CohortParams::seed);

    m.def("cohort_rows", &cohort_rows, py::arg("params"),
          "Synthetic cohort as an (n_rows, 9) array in dataset-CSV column order");
}
