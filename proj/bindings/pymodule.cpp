#include <pybind11/pybind11.h>

#include "mdiqkd/core.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_mdiqkd, m) {
  m.doc() = "Three-node time-bin QKD simulator";

  m.def("binary_entropy", &mdiqkd::binary_entropy, py::arg("p"));
  m.def("db_to_transmittance", &mdiqkd::db_to_transmittance, py::arg("loss_db"));
  m.def("poisson_pn", &mdiqkd::poisson_pn, py::arg("mu"), py::arg("n"));
}
