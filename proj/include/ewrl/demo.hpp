#pragma once

#include <string>
#include <vector>

#include "ewrl/dataset.hpp"
#include "ewrl/emotion_wheel.hpp"
#include "ewrl/run_config.hpp"

namespace ewrl {

// The bundled default wheel: four primary-emotion clusters, one canonical
// label each, with a ring of everyday synonyms mapping into them. Kept
// deliberately small so the demo task is learnable from a uniform policy
// within the bundled iteration budget.
EmotionWheel default_wheel();

// Canonical JSON serialization of default_wheel(); byte-identical to the
// copy shipped at data/default_wheel.json.
std::string default_wheel_json();

// Synthetic training task: four contexts, each tied to one ground-truth
// cluster, `samples_per_context` samples each.
std::vector<Sample> make_demo_dataset(int samples_per_context);

// Settings the bundled demo config pins (chosen so the demo train run is
// reproducible and finishes quickly; see the bundled config for values).
int demo_samples_per_context();
TrainConfig demo_train_config();

// Writes wheel.json, dataset.jsonl, and config.ini into out_dir (created if
// missing). Returns the path of the written config file.
std::string write_demo_bundle(const std::string& out_dir);

}  // namespace ewrl
