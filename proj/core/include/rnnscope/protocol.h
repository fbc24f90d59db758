// Copyright 2026 The rnnscope Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command/snapshot boundary between a training session and its clients.
//
// Every message on the wire is one JSON document:
//
//   {"type": "hello" | "command" | "snapshot" | "error",
//    "seq":  n,          // strictly increasing per direction per connection
//    "body": {...}}
//
// Command bodies carry a "cmd" discriminator, e.g. {"cmd": "step"} or
// {"cmd": "set_param", "name": "learning_rate", "value": 0.001}.
// SessionController implements the protocol without any transport; the
// WebSocket server in server.h only moves text frames.

#ifndef RNNSCOPE_PROTOCOL_H_
#define RNNSCOPE_PROTOCOL_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rnnscope/step_machine.h"
#include "rnnscope/trainer.h"

namespace rnnscope {

inline constexpr std::string_view kProtocolVersion = "1";

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ViewMode { kOverview, kCell };

struct ViewState {
  ViewMode mode = ViewMode::kOverview;
  std::size_t layer = 0;  // focused layer in cell mode

  bool operator==(const ViewState&) const = default;
};

namespace cmd {
struct Play {};
struct Pause {};
struct Step {};
struct JumpPhase {
  Phase phase = Phase::kPrediction;
};
struct Reset {};
struct SetParam {
  HyperParam name = HyperParam::kLearningRate;
  double value = 0.0;
};
struct EditArch {
  ArchitectureEdit edit;
};
struct SelectTask {
  Task task = Task::kSine;
};
struct SetView {
  ViewState view;
};
struct SetPace {
  double rate = 1.0;
};
}  // namespace cmd

using Command =
    std::variant<cmd::Play, cmd::Pause, cmd::Step, cmd::JumpPhase, cmd::Reset,
                 cmd::SetParam, cmd::EditArch, cmd::SelectTask, cmd::SetView,
                 cmd::SetPace>;

// Throws ProtocolError naming what could not be parsed.
Command parse_command(const nlohmann::json& body);
nlohmann::json command_to_json(const Command& command);

struct ValidationPlot {
  std::size_t window = 0;
  std::size_t horizon = 0;
  std::vector<double> xs;
  std::vector<double> input;
  std::vector<double> target;
  std::vector<double> prediction;
  std::vector<double> error;
  std::string input_text;
  std::string target_text;
  std::string predicted_text;
  double loss = 0.0;

  bool operator==(const ValidationPlot&) const = default;
};

// Intermediates of one cell at one timestep. Keys: x, a_prev, c_prev, i, f,
// o, g, c, a (LSTM-only keys are absent for vanilla cells).
struct CellView {
  std::size_t layer = 0;
  std::size_t timestep = 0;  // 1-based
  std::map<std::string, std::vector<double>> values;

  bool operator==(const CellView&) const = default;
};

// Everything a client needs to render either view, with no reference to
// earlier snapshots.
struct Snapshot {
  std::string session_id;
  std::size_t epoch = 0;
  Phase phase = Phase::kPrediction;
  ViewState view;
  NetworkConfig config;
  std::vector<HistoryEntry> loss_history;
  ValidationPlot validation;
  std::optional<StepEvent> current_event;
  std::optional<CellView> cell;
  std::vector<std::vector<double>> gradient_norms;
  std::size_t plan_cursor = 0;
  std::size_t plan_size = 0;
  bool playing = false;
  double pace = 1.0;
  bool diverged = false;
  std::string diverged_reason;

  bool operator==(const Snapshot&) const = default;
};

nlohmann::json config_to_json(const NetworkConfig& config);
// Missing keys keep the values of `base`. Throws ProtocolError on bad values
// (range checks are left to validate_config).
NetworkConfig config_from_json(const nlohmann::json& j,
                               const NetworkConfig& base = {});

nlohmann::json event_to_json(const StepEvent& event, bool with_payload = true);
StepEvent event_from_json(const nlohmann::json& j);

nlohmann::json snapshot_to_json(const Snapshot& snapshot);
Snapshot snapshot_from_json(const nlohmann::json& j);

// Canonical text form: compact, keys sorted, floats with round-trip
// precision, non-finite values as null.
std::string serialize(const nlohmann::json& j);

// "epoch,train_loss,validation_loss" plus one row per epoch.
std::string format_double(double value);
std::string history_csv_header();
std::string history_csv_row(const HistoryEntry& entry);
std::string history_csv(const std::vector<HistoryEntry>& history);

// Line-delimited event stream of a plan.
void write_plan_jsonl(std::ostream& out, const StepPlan& plan,
                      bool with_payload);

struct Message {
  std::string type;  // hello, snapshot, error
  nlohmann::json body;
};

// One client's session plus its view, play state and pacing. Not
// thread-safe: a single writer drives it.
class SessionController {
 public:
  using Clock = Pacer::Clock;

  SessionController(std::string session_id, NetworkConfig defaults,
                    std::function<Clock::time_point()> clock = Clock::now);

  Message hello() const;

  // Parses an incoming envelope and applies it. Malformed input, a
  // non-increasing seq and rejected commands all yield an error message;
  // the session is left unchanged in those cases.
  std::vector<Message> handle_text(std::string_view text);
  std::vector<Message> handle(const Command& command);

  // Play mode: emits whatever became due since the last call.
  std::vector<Message> on_timer();
  // Time until the next play-mode tick, or nullopt when paused.
  std::optional<Clock::duration> next_tick_in() const;

  Snapshot snapshot() const;
  Message snapshot_message() const;

  const TrainingSession& session() const { return session_; }
  const ViewState& view() const { return view_; }
  bool playing() const { return playing_; }

 private:
  std::vector<Message> tick(std::size_t count);
  // One unit of progress for the current view: a micro-step in cell mode,
  // a phase segment in overview mode.
  void advance_one_unit();
  void ensure_plan();
  void drop_plan();

  std::string session_id_;
  TrainingSession session_;
  std::optional<StepPlan> plan_;
  std::optional<StepEvent> last_event_;
  ViewState view_;
  bool playing_ = false;
  Pacer pacer_;
  std::function<Clock::time_point()> clock_;
  std::optional<std::int64_t> last_incoming_seq_;
};

// Wraps a message into an envelope with the given outgoing seq.
nlohmann::json envelope(const Message& message, std::uint64_t seq);

}  // namespace rnnscope

#endif  // RNNSCOPE_PROTOCOL_H_
