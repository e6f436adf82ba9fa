#pragma once

#include <string>

#include "ermcat/model.hpp"
#include "ermcat/storage.hpp"

namespace ermcat {

/// Demo model in schema "public":
///   Experiment(ID, Name), Sample(ID, Experiment_ID -> Experiment, Name),
///   SEC_Asset(ID, Sample_ID -> Sample, URL),
///   Subject(id, name), Image(id, subject_id -> Subject, acquired, quality, reviewed).
ErmModel demo_model();

/// demo_model() with seed rows: six experiments of which 5 and 6 have no
/// samples, four samples, three assets, three subjects and eight images.
CatalogState demo_fixture(const std::string& owner);

}  // namespace ermcat
