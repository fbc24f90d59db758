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

#include "rnnscope/protocol.h"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>

namespace rnnscope {
namespace {

using json = nlohmann::json;

constexpr std::size_t kMaxTicksPerTimer = 64;

[[noreturn]] void fail(const std::string& message) {
  throw ProtocolError(message);
}

const json& require(const json& j, const char* key) {
  if (!j.is_object()) fail("expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

double as_double(const json& j, const char* key) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) fail(std::string("field '") + key + "' must be a number");
  return j.get<double>();
}

std::size_t as_count(const json& j, const char* key) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::size_t>(j.get<std::int64_t>());
  }
  fail(std::string("field '") + key + "' must be a non-negative integer");
}

std::string as_string(const json& j, const char* key) {
  if (!j.is_string()) fail(std::string("field '") + key + "' must be a string");
  return j.get<std::string>();
}

bool as_bool(const json& j, const char* key) {
  if (!j.is_boolean()) fail(std::string("field '") + key + "' must be a boolean");
  return j.get<bool>();
}

double get_double(const json& j, const char* key) {
  return as_double(require(j, key), key);
}
std::size_t get_count(const json& j, const char* key) {
  return as_count(require(j, key), key);
}
std::string get_string(const json& j, const char* key) {
  return as_string(require(j, key), key);
}

json doubles_to_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

std::vector<double> doubles_from_json(const json& j, const char* key) {
  if (!j.is_array()) fail(std::string("field '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(as_double(x, key));
  return out;
}

Phase phase_from(const json& j, const char* key) {
  const std::string name = as_string(j, key);
  auto phase = parse_phase(name);
  if (!phase) fail("unknown phase '" + name + "'");
  return *phase;
}

Task task_from(const json& j, const char* key) {
  const std::string name = as_string(j, key);
  auto task = parse_task(name);
  if (!task) fail("unknown task '" + name + "'");
  return *task;
}

CellKind cell_from(const json& j, const char* key) {
  const std::string name = as_string(j, key);
  auto kind = parse_cell_kind(name);
  if (!kind) fail("unknown cell kind '" + name + "'");
  return *kind;
}

std::string_view view_mode_name(ViewMode mode) {
  return mode == ViewMode::kCell ? "cell" : "overview";
}

json view_to_json(const ViewState& view) {
  return {{"mode", view_mode_name(view.mode)}, {"layer", view.layer}};
}

ViewState view_from_json(const json& j) {
  ViewState view;
  const std::string mode = get_string(j, "mode");
  if (mode == "cell") {
    view.mode = ViewMode::kCell;
  } else if (mode != "overview") {
    fail("unknown view '" + mode + "'");
  }
  view.layer = get_count(j, "layer");
  return view;
}

std::string_view edit_action_name(ArchitectureEdit::Kind kind) {
  switch (kind) {
    case ArchitectureEdit::Kind::kAddLayer:
      return "add_layer";
    case ArchitectureEdit::Kind::kRemoveLayer:
      return "remove_layer";
    case ArchitectureEdit::Kind::kSetCellKind:
      return "set_cell_kind";
    case ArchitectureEdit::Kind::kSetTask:
      return "set_task";
  }
  return "unknown";
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

json error_body(const std::string& message, std::optional<std::int64_t> seq) {
  json body = {{"message", message}};
  body["in_reply_to"] = seq ? json(*seq) : json(nullptr);
  return body;
}

}  // namespace

Command parse_command(const json& body) {
  if (!body.is_object()) fail("command body must be an object");
  const std::string name = get_string(body, "cmd");
  if (name == "play") return cmd::Play{};
  if (name == "pause") return cmd::Pause{};
  if (name == "step") return cmd::Step{};
  if (name == "reset") return cmd::Reset{};
  if (name == "jump_phase") {
    return cmd::JumpPhase{phase_from(require(body, "phase"), "phase")};
  }
  if (name == "set_param") {
    const std::string param = get_string(body, "name");
    auto p = parse_hyperparam(param);
    if (!p) fail("unknown parameter '" + param + "'");
    return cmd::SetParam{*p, get_double(body, "value")};
  }
  if (name == "edit_arch") {
    const std::string action = get_string(body, "action");
    ArchitectureEdit edit;
    if (action == "add_layer") {
      edit.kind = ArchitectureEdit::Kind::kAddLayer;
      edit.at = get_count(body, "at");
    } else if (action == "remove_layer") {
      edit.kind = ArchitectureEdit::Kind::kRemoveLayer;
      edit.at = get_count(body, "at");
    } else if (action == "set_cell_kind") {
      edit.kind = ArchitectureEdit::Kind::kSetCellKind;
      edit.cell_kind = cell_from(require(body, "cell"), "cell");
    } else if (action == "set_task") {
      edit.kind = ArchitectureEdit::Kind::kSetTask;
      edit.task = task_from(require(body, "task"), "task");
    } else {
      fail("unknown edit_arch action '" + action + "'");
    }
    return cmd::EditArch{edit};
  }
  if (name == "select_task") {
    return cmd::SelectTask{task_from(require(body, "task"), "task")};
  }
  if (name == "set_view") {
    ViewState view;
    const std::string mode = get_string(body, "view");
    if (mode == "cell") {
      view.mode = ViewMode::kCell;
      auto it = body.find("layer");
      if (it != body.end()) view.layer = as_count(*it, "layer");
    } else if (mode != "overview") {
      fail("unknown view '" + mode + "'");
    }
    return cmd::SetView{view};
  }
  if (name == "set_pace") return cmd::SetPace{get_double(body, "rate")};
  fail("unknown command '" + name + "'");
}

json command_to_json(const Command& command) {
  return std::visit(
      Overloaded{
          [](const cmd::Play&) { return json{{"cmd", "play"}}; },
          [](const cmd::Pause&) { return json{{"cmd", "pause"}}; },
          [](const cmd::Step&) { return json{{"cmd", "step"}}; },
          [](const cmd::Reset&) { return json{{"cmd", "reset"}}; },
          [](const cmd::JumpPhase& c) {
            return json{{"cmd", "jump_phase"}, {"phase", phase_name(c.phase)}};
          },
          [](const cmd::SetParam& c) {
            return json{{"cmd", "set_param"},
                        {"name", hyperparam_name(c.name)},
                        {"value", c.value}};
          },
          [](const cmd::EditArch& c) {
            json j = {{"cmd", "edit_arch"},
                      {"action", edit_action_name(c.edit.kind)}};
            switch (c.edit.kind) {
              case ArchitectureEdit::Kind::kAddLayer:
              case ArchitectureEdit::Kind::kRemoveLayer:
                j["at"] = c.edit.at;
                break;
              case ArchitectureEdit::Kind::kSetCellKind:
                j["cell"] = cell_kind_name(c.edit.cell_kind);
                break;
              case ArchitectureEdit::Kind::kSetTask:
                j["task"] = task_name(c.edit.task);
                break;
            }
            return j;
          },
          [](const cmd::SelectTask& c) {
            return json{{"cmd", "select_task"}, {"task", task_name(c.task)}};
          },
          [](const cmd::SetView& c) {
            json j = {{"cmd", "set_view"}, {"view", view_mode_name(c.view.mode)}};
            if (c.view.mode == ViewMode::kCell) j["layer"] = c.view.layer;
            return j;
          },
          [](const cmd::SetPace& c) {
            return json{{"cmd", "set_pace"}, {"rate", c.rate}};
          },
      },
      command);
}

json config_to_json(const NetworkConfig& c) {
  return {
      {"cell_kind", cell_kind_name(c.cell_kind)},
      {"layer_count", c.layer_count},
      {"hidden", c.hidden},
      {"task", task_name(c.task)},
      {"window", c.window},
      {"horizon", c.horizon},
      {"noise_amp", c.noise_amp},
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"batches_per_epoch", c.batches_per_epoch},
      {"seed", c.seed},
      {"dx", c.dx},
      {"init", init_scheme_name(c.init)},
      {"forget_bias", c.forget_bias},
      {"clip_norm", c.clip_norm},
  };
}

NetworkConfig config_from_json(const json& j, const NetworkConfig& base) {
  if (!j.is_object()) fail("config must be an object");
  NetworkConfig c = base;
  for (const auto& [key, value] : j.items()) {
    const char* k = key.c_str();
    if (key == "cell_kind") {
      c.cell_kind = cell_from(value, k);
    } else if (key == "layer_count") {
      c.layer_count = as_count(value, k);
    } else if (key == "hidden") {
      c.hidden = as_count(value, k);
    } else if (key == "task") {
      c.task = task_from(value, k);
    } else if (key == "window") {
      c.window = as_count(value, k);
    } else if (key == "horizon") {
      c.horizon = as_count(value, k);
    } else if (key == "noise_amp") {
      c.noise_amp = as_double(value, k);
    } else if (key == "learning_rate") {
      c.learning_rate = as_double(value, k);
    } else if (key == "batch_size") {
      c.batch_size = as_count(value, k);
    } else if (key == "batches_per_epoch") {
      c.batches_per_epoch = as_count(value, k);
    } else if (key == "seed") {
      c.seed = as_count(value, k);
    } else if (key == "dx") {
      c.dx = as_double(value, k);
    } else if (key == "init") {
      try {
        c.init = parse_init_scheme(as_string(value, k));
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
    } else if (key == "forget_bias") {
      c.forget_bias = as_double(value, k);
    } else if (key == "clip_norm") {
      c.clip_norm = as_double(value, k);
    } else {
      fail("unknown config key '" + key + "'");
    }
  }
  return c;
}

json event_to_json(const StepEvent& ev, bool with_payload) {
  json j = {{"index", ev.index},
            {"phase", phase_name(ev.phase)},
            {"detail", step_detail_name(ev.detail)}};
  if (has_position(ev.detail)) {
    j["layer"] = ev.layer;
    j["timestep"] = ev.timestep;
  }
  if (with_payload) {
    json vectors = json::object();
    for (const auto& [name, v] : ev.payload.vectors) {
      vectors[name] = doubles_to_json(v);
    }
    json scalars = json::object();
    for (const auto& [name, s] : ev.payload.scalars) scalars[name] = s;
    j["payload"] = {{"vectors", vectors}, {"scalars", scalars}};
  }
  return j;
}

StepEvent event_from_json(const json& j) {
  StepEvent ev;
  ev.index = get_count(j, "index");
  ev.phase = phase_from(require(j, "phase"), "phase");
  const std::string detail = get_string(j, "detail");
  auto d = parse_step_detail(detail);
  if (!d) fail("unknown step detail '" + detail + "'");
  ev.detail = *d;
  if (has_position(ev.detail)) {
    ev.layer = get_count(j, "layer");
    ev.timestep = get_count(j, "timestep");
  }
  auto it = j.find("payload");
  if (it != j.end()) {
    for (const auto& [name, v] : require(*it, "vectors").items()) {
      ev.payload.vectors[name] = doubles_from_json(v, "vectors");
    }
    for (const auto& [name, s] : require(*it, "scalars").items()) {
      ev.payload.scalars[name] = as_double(s, "scalars");
    }
  }
  return ev;
}

json snapshot_to_json(const Snapshot& s) {
  json history = json::array();
  for (const auto& h : s.loss_history) {
    history.push_back({{"epoch", h.epoch},
                       {"train_loss", h.train_loss},
                       {"validation_loss", h.validation_loss}});
  }
  const ValidationPlot& v = s.validation;
  json validation = {{"window", v.window},
                     {"horizon", v.horizon},
                     {"xs", doubles_to_json(v.xs)},
                     {"input", doubles_to_json(v.input)},
                     {"target", doubles_to_json(v.target)},
                     {"prediction", doubles_to_json(v.prediction)},
                     {"error", doubles_to_json(v.error)},
                     {"input_text", v.input_text},
                     {"target_text", v.target_text},
                     {"predicted_text", v.predicted_text},
                     {"loss", v.loss}};
  json cell = nullptr;
  if (s.cell) {
    json values = json::object();
    for (const auto& [name, vec] : s.cell->values) {
      values[name] = doubles_to_json(vec);
    }
    cell = {{"layer", s.cell->layer},
            {"timestep", s.cell->timestep},
            {"values", values}};
  }
  json norms = json::array();
  for (const auto& layer : s.gradient_norms) {
    norms.push_back(doubles_to_json(layer));
  }
  return {
      {"session_id", s.session_id},
      {"epoch", s.epoch},
      {"phase", phase_name(s.phase)},
      {"view", view_to_json(s.view)},
      {"config", config_to_json(s.config)},
      {"loss_history", history},
      {"validation", validation},
      {"current_event",
       s.current_event ? event_to_json(*s.current_event) : json(nullptr)},
      {"cell", cell},
      {"gradient_norms", norms},
      {"plan", {{"cursor", s.plan_cursor}, {"size", s.plan_size}}},
      {"playing", s.playing},
      {"pace", s.pace},
      {"diverged", s.diverged},
      {"diverged_reason", s.diverged_reason},
  };
}

Snapshot snapshot_from_json(const json& j) {
  Snapshot s;
  s.session_id = get_string(j, "session_id");
  s.epoch = get_count(j, "epoch");
  s.phase = phase_from(require(j, "phase"), "phase");
  s.view = view_from_json(require(j, "view"));
  s.config = config_from_json(require(j, "config"));

  const json& history = require(j, "loss_history");
  if (!history.is_array()) fail("field 'loss_history' must be an array");
  for (const auto& h : history) {
    s.loss_history.push_back({get_count(h, "epoch"),
                              get_double(h, "train_loss"),
                              get_double(h, "validation_loss")});
  }

  const json& v = require(j, "validation");
  s.validation.window = get_count(v, "window");
  s.validation.horizon = get_count(v, "horizon");
  s.validation.xs = doubles_from_json(require(v, "xs"), "xs");
  s.validation.input = doubles_from_json(require(v, "input"), "input");
  s.validation.target = doubles_from_json(require(v, "target"), "target");
  s.validation.prediction =
      doubles_from_json(require(v, "prediction"), "prediction");
  s.validation.error = doubles_from_json(require(v, "error"), "error");
  s.validation.input_text = get_string(v, "input_text");
  s.validation.target_text = get_string(v, "target_text");
  s.validation.predicted_text = get_string(v, "predicted_text");
  s.validation.loss = get_double(v, "loss");

  const json& ev = require(j, "current_event");
  if (!ev.is_null()) s.current_event = event_from_json(ev);

  const json& cell = require(j, "cell");
  if (!cell.is_null()) {
    CellView cv;
    cv.layer = get_count(cell, "layer");
    cv.timestep = get_count(cell, "timestep");
    for (const auto& [name, vec] : require(cell, "values").items()) {
      cv.values[name] = doubles_from_json(vec, "values");
    }
    s.cell = std::move(cv);
  }

  const json& norms = require(j, "gradient_norms");
  if (!norms.is_array()) fail("field 'gradient_norms' must be an array");
  for (const auto& layer : norms) {
    s.gradient_norms.push_back(doubles_from_json(layer, "gradient_norms"));
  }

  const json& plan = require(j, "plan");
  s.plan_cursor = get_count(plan, "cursor");
  s.plan_size = get_count(plan, "size");
  s.playing = as_bool(require(j, "playing"), "playing");
  s.pace = get_double(j, "pace");
  s.diverged = as_bool(require(j, "diverged"), "diverged");
  s.diverged_reason = get_string(j, "diverged_reason");
  return s;
}

std::string serialize(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

std::string history_csv_header() { return "epoch,train_loss,validation_loss"; }

std::string history_csv_row(const HistoryEntry& e) {
  return std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
         format_double(e.validation_loss);
}

std::string history_csv(const std::vector<HistoryEntry>& history) {
  std::string out = history_csv_header() + "\n";
  for (const auto& e : history) out += history_csv_row(e) + "\n";
  return out;
}

void write_plan_jsonl(std::ostream& out, const StepPlan& plan,
                      bool with_payload) {
  for (const auto& ev : plan.events) {
    out << serialize(event_to_json(ev, with_payload)) << '\n';
  }
}

json envelope(const Message& message, std::uint64_t seq) {
  return {{"type", message.type}, {"seq", seq}, {"body", message.body}};
}

SessionController::SessionController(
    std::string session_id, NetworkConfig defaults,
    std::function<Clock::time_point()> clock)
    : session_id_(std::move(session_id)),
      session_(create_session(defaults)),
      clock_(std::move(clock)) {}

Message SessionController::hello() const {
  return {"hello",
          {{"protocol_version", kProtocolVersion},
           {"session_id", session_id_},
           {"default_config", config_to_json(session_.config)}}};
}

std::vector<Message> SessionController::handle_text(std::string_view text) {
  std::optional<std::int64_t> seq;
  try {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) fail("message must be a JSON object");
    const std::string type = get_string(j, "type");
    const json& seq_json = require(j, "seq");
    if (!seq_json.is_number_integer()) fail("field 'seq' must be an integer");
    seq = seq_json.get<std::int64_t>();
    if (last_incoming_seq_ && *seq <= *last_incoming_seq_) {
      fail("seq " + std::to_string(*seq) + " does not increase (last " +
           std::to_string(*last_incoming_seq_) + ")");
    }
    last_incoming_seq_ = seq;
    if (type != "command") fail("unexpected message type '" + type + "'");
    Command command = parse_command(require(j, "body"));
    auto out = handle(command);
    for (auto& m : out) {
      if (m.type == "error") m.body["in_reply_to"] = *seq;
    }
    return out;
  } catch (const ProtocolError& e) {
    return {{"error", error_body(e.what(), seq)}};
  } catch (const json::exception& e) {
    return {{"error", error_body(e.what(), seq)}};
  }
}

std::vector<Message> SessionController::handle(const Command& command) {
  try {
    std::visit(
        Overloaded{
            [&](const cmd::Play&) {
              if (session_.diverged) {
                throw SessionDiverged("session diverged; reset to continue");
              }
              playing_ = true;
              pacer_.start(clock_());
            },
            [&](const cmd::Pause&) {
              playing_ = false;
              pacer_.stop();
            },
            [&](const cmd::Step&) {
              ensure_plan();
              if (view_.mode == ViewMode::kCell) {
                last_event_ = advance(*plan_, session_);
              } else {
                while (!plan_->finished()) last_event_ = advance(*plan_, session_);
              }
            },
            [&](const cmd::JumpPhase& c) {
              ensure_plan();
              jump_to_phase(*plan_, session_, c.phase);
              if (plan_->cursor > 0) {
                last_event_ = plan_->events[plan_->cursor - 1];
              } else {
                last_event_.reset();
              }
            },
            [&](const cmd::Reset&) {
              reset(session_);
              drop_plan();
            },
            [&](const cmd::SetParam& c) {
              TrainingSession next = session_;
              set_hyperparam(next, c.name, c.value);
              session_ = std::move(next);
              // Pending batches were drawn with the old settings.
              if (plan_ && !plan_->mutated && plan_->cursor == 0) drop_plan();
            },
            [&](const cmd::EditArch& c) {
              TrainingSession next = session_;
              edit_architecture(next, c.edit);
              session_ = std::move(next);
              drop_plan();
            },
            [&](const cmd::SelectTask& c) {
              ArchitectureEdit edit;
              edit.kind = ArchitectureEdit::Kind::kSetTask;
              edit.task = c.task;
              TrainingSession next = session_;
              edit_architecture(next, edit);
              session_ = std::move(next);
              drop_plan();
            },
            [&](const cmd::SetView& c) {
              if (c.view.mode == ViewMode::kCell &&
                  c.view.layer >= session_.config.layer_count) {
                throw ConfigError(
                    "layer", "no layer " + std::to_string(c.view.layer) +
                                 " in a network of " +
                                 std::to_string(session_.config.layer_count));
              }
              view_ = c.view;
              if (view_.mode == ViewMode::kOverview) view_.layer = 0;
            },
            [&](const cmd::SetPace& c) { pace(pacer_, c.rate, clock_()); },
        },
        command);
  } catch (const std::exception& e) {
    return {{"error", error_body(e.what(), std::nullopt)}};
  }
  if (view_.layer >= session_.config.layer_count) view_.layer = 0;
  return {snapshot_message()};
}

void SessionController::ensure_plan() {
  if (session_.diverged) {
    throw SessionDiverged("session diverged (" + session_.diverged_reason +
                          "); reset to continue");
  }
  if (!plan_ || plan_->finished()) {
    plan_ = compile_epoch_plan(session_);
    last_event_.reset();
  }
}

void SessionController::drop_plan() {
  plan_.reset();
  last_event_.reset();
  session_.phase = Phase::kPrediction;
}

void SessionController::advance_one_unit() {
  ensure_plan();
  if (view_.mode == ViewMode::kCell) {
    last_event_ = advance(*plan_, session_);
    return;
  }
  const Phase phase = *plan_->next_phase();
  while (plan_->next_phase() == phase) last_event_ = advance(*plan_, session_);
}

std::vector<Message> SessionController::tick(std::size_t count) {
  std::vector<Message> out;
  for (std::size_t i = 0; i < count && playing_; ++i) {
    try {
      advance_one_unit();
    } catch (const std::exception& e) {
      playing_ = false;
      pacer_.stop();
      out.push_back({"error", error_body(e.what(), std::nullopt)});
    }
    if (session_.diverged) {
      playing_ = false;
      pacer_.stop();
    }
    out.push_back(snapshot_message());
  }
  return out;
}

std::vector<Message> SessionController::on_timer() {
  if (!playing_) return {};
  return tick(std::min(pacer_.due(clock_()), kMaxTicksPerTimer));
}

std::optional<SessionController::Clock::duration>
SessionController::next_tick_in() const {
  if (!playing_) return std::nullopt;
  return pacer_.until_next(clock_());
}

Message SessionController::snapshot_message() const {
  return {"snapshot", snapshot_to_json(snapshot())};
}

Snapshot SessionController::snapshot() const {
  Snapshot s;
  s.session_id = session_id_;
  s.epoch = session_.epoch;
  s.phase = session_.phase;
  s.view = view_;
  s.config = session_.config;
  s.loss_history = session_.history;

  const ValidationRecord& v = session_.last_validation;
  s.validation.window = session_.config.window;
  s.validation.horizon = effective_horizon(session_.config);
  s.validation.xs = v.xs;
  s.validation.input = v.input;
  s.validation.target = v.target;
  s.validation.prediction = v.prediction;
  s.validation.error = v.error;
  s.validation.input_text = v.input_text;
  s.validation.target_text = v.target_text;
  s.validation.predicted_text = v.predicted_text;
  s.validation.loss = v.loss;

  s.current_event = last_event_;
  if (view_.mode == ViewMode::kCell) {
    const ForwardTrace* trace = nullptr;
    std::size_t t = 0;
    if (plan_ && last_event_ && has_position(last_event_->detail)) {
      trace = &plan_->first_batch.first_trace;
      t = last_event_->timestep;
    } else if (!v.trace.steps.empty()) {
      trace = &v.trace;
      t = trace->timesteps();
    }
    if (trace && view_.layer < trace->layer_count() && t >= 1 &&
        t <= trace->timesteps()) {
      const CellStep& step = trace->steps[view_.layer][t - 1];
      CellView cell;
      cell.layer = view_.layer;
      cell.timestep = t;
      const std::pair<const char*, const Vector*> parts[] = {
          {"x", &step.x}, {"a_prev", &step.a_prev}, {"c_prev", &step.c_prev},
          {"i", &step.i}, {"f", &step.f},           {"o", &step.o},
          {"g", &step.g}, {"c", &step.c},           {"a", &step.a}};
      for (const auto& [name, vec] : parts) {
        if (!vec->empty()) cell.values[name] = vec->values();
      }
      s.cell = std::move(cell);
    }
  }
  s.gradient_norms = session_.last_gradient_norms;
  if (plan_) {
    s.plan_cursor = plan_->cursor;
    s.plan_size = plan_->size();
  }
  s.playing = playing_;
  s.pace = pacer_.rate();
  s.diverged = session_.diverged;
  s.diverged_reason = session_.diverged_reason;
  return s;
}

}  // namespace rnnscope
