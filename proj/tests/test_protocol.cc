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

#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "rnnscope/protocol.h"

namespace rnnscope {
namespace {

using nlohmann::json;
using namespace std::chrono_literals;

NetworkConfig small_config() {
  NetworkConfig c;
  c.hidden = 4;
  c.window = 6;
  c.horizon = 2;
  c.batch_size = 2;
  c.batches_per_epoch = 3;
  c.seed = 11;
  return c;
}

// A clock the test moves by hand.
struct FakeClock {
  Pacer::Clock::time_point now = Pacer::Clock::time_point{} + 1h;
  std::function<Pacer::Clock::time_point()> fn() {
    return [this] { return now; };
  }
};

std::string command_text(const json& body, std::int64_t seq) {
  return json{{"type", "command"}, {"seq", seq}, {"body", body}}.dump();
}

Snapshot only_snapshot(const std::vector<Message>& out) {
  EXPECT_EQ(out.size(), 1u);
  EXPECT_EQ(out.at(0).type, "snapshot") << out.at(0).body.dump();
  return snapshot_from_json(out.at(0).body);
}

TEST(Commands, RoundTrip) {
  ArchitectureEdit add;
  add.kind = ArchitectureEdit::Kind::kAddLayer;
  add.at = 1;
  ArchitectureEdit cell;
  cell.kind = ArchitectureEdit::Kind::kSetCellKind;
  cell.cell_kind = CellKind::kVanilla;
  ArchitectureEdit task;
  task.kind = ArchitectureEdit::Kind::kSetTask;
  task.task = Task::kLorem;
  const std::vector<Command> commands = {
      cmd::Play{},
      cmd::Pause{},
      cmd::Step{},
      cmd::Reset{},
      cmd::JumpPhase{Phase::kTraining},
      cmd::SetParam{HyperParam::kNoiseAmp, 0.25},
      cmd::EditArch{add},
      cmd::EditArch{cell},
      cmd::EditArch{task},
      cmd::SelectTask{Task::kAbab},
      cmd::SetView{{ViewMode::kCell, 2}},
      cmd::SetView{{ViewMode::kOverview, 0}},
      cmd::SetPace{7.5},
  };
  for (const Command& c : commands) {
    const json j = command_to_json(c);
    const Command back = parse_command(json::parse(j.dump()));
    EXPECT_EQ(back.index(), c.index());
    EXPECT_EQ(command_to_json(back), j);
  }
}

TEST(Commands, Examples) {
  auto c = parse_command(json::parse(R"({"cmd":"set_param","name":"learning_rate","value":0.001})"));
  ASSERT_TRUE(std::holds_alternative<cmd::SetParam>(c));
  EXPECT_EQ(std::get<cmd::SetParam>(c).name, HyperParam::kLearningRate);
  EXPECT_EQ(std::get<cmd::SetParam>(c).value, 0.001);
  c = parse_command(json::parse(R"({"cmd":"set_view","view":"cell"})"));
  EXPECT_EQ(std::get<cmd::SetView>(c).view.layer, 0u);
  c = parse_command(json::parse(R"({"cmd":"jump_phase","phase":"validation"})"));
  EXPECT_EQ(std::get<cmd::JumpPhase>(c).phase, Phase::kValidation);
}

TEST(Commands, Rejections) {
  const char* bad[] = {
      R"([])",
      R"({})",
      R"({"cmd":"fly"})",
      R"({"cmd":7})",
      R"({"cmd":"jump_phase"})",
      R"({"cmd":"jump_phase","phase":"dreaming"})",
      R"({"cmd":"set_param","name":"momentum","value":1})",
      R"({"cmd":"set_param","name":"learning_rate","value":"fast"})",
      R"({"cmd":"edit_arch","action":"add_layer"})",
      R"({"cmd":"edit_arch","action":"add_layer","at":-1})",
      R"({"cmd":"edit_arch","action":"shrink"})",
      R"({"cmd":"select_task","task":"poetry"})",
      R"({"cmd":"set_view","view":"sideways"})",
      R"({"cmd":"set_pace"})",
  };
  for (const char* text : bad) {
    EXPECT_THROW(parse_command(json::parse(text)), ProtocolError) << text;
  }
  try {
    parse_command(json::parse(R"({"cmd":"fly"})"));
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("fly"), std::string::npos);
  }
}

TEST(Config, RoundTripAndPartial) {
  NetworkConfig c = small_config();
  c.cell_kind = CellKind::kVanilla;
  c.task = Task::kComposite;
  c.noise_amp = 0.125;
  EXPECT_EQ(config_from_json(json::parse(config_to_json(c).dump())), c);
  NetworkConfig partial = config_from_json(json{{"hidden", 9}}, c);
  EXPECT_EQ(partial.hidden, 9u);
  EXPECT_EQ(partial.window, c.window);
  EXPECT_THROW(config_from_json(json{{"hiden", 9}}), ProtocolError);
  EXPECT_THROW(config_from_json(json{{"hidden", -2}}), ProtocolError);
  EXPECT_THROW(config_from_json(json{{"task", "chess"}}), ProtocolError);
}

TEST(Events, RoundTrip) {
  TrainingSession s = create_session(small_config());
  StepPlan plan = compile_epoch_plan(s);
  for (const StepEvent& ev : plan.events) {
    EXPECT_EQ(event_from_json(json::parse(serialize(event_to_json(ev)))), ev);
    const json bare = event_to_json(ev, false);
    EXPECT_FALSE(bare.contains("payload"));
    EXPECT_EQ(bare.contains("layer"), has_position(ev.detail));
  }
}

TEST(Snapshots, SerializeParseSerializeIsIdentity) {
  FakeClock clock;
  SessionController c("x", small_config(), clock.fn());
  std::vector<std::string> texts;
  texts.push_back(serialize(snapshot_to_json(c.snapshot())));
  c.handle(cmd::SetView{{ViewMode::kCell, 0}});
  for (int i = 0; i < 7; ++i) c.handle(cmd::Step{});
  texts.push_back(serialize(snapshot_to_json(c.snapshot())));
  c.handle(cmd::JumpPhase{Phase::kTraining});
  c.handle(cmd::Step{});
  texts.push_back(serialize(snapshot_to_json(c.snapshot())));
  c.handle(cmd::SetView{{ViewMode::kOverview, 0}});
  c.handle(cmd::Step{});
  texts.push_back(serialize(snapshot_to_json(c.snapshot())));
  for (const auto& text : texts) {
    const Snapshot parsed = snapshot_from_json(json::parse(text));
    EXPECT_EQ(serialize(snapshot_to_json(parsed)), text);
  }
}

TEST(Snapshots, NonFiniteBecomesNullAndBack) {
  Snapshot s;
  s.session_id = "n";
  s.loss_history = {{1, std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::quiet_NaN()}};
  s.validation.prediction = {1.5, std::numeric_limits<double>::quiet_NaN()};
  const std::string text = serialize(snapshot_to_json(s));
  EXPECT_NE(text.find("\"train_loss\":null"), std::string::npos);
  EXPECT_NE(text.find("[1.5,null]"), std::string::npos);
  const Snapshot back = snapshot_from_json(json::parse(text));
  EXPECT_TRUE(std::isnan(back.loss_history[0].train_loss));
  EXPECT_TRUE(std::isnan(back.validation.prediction[1]));
  EXPECT_EQ(serialize(snapshot_to_json(back)), text);
}

TEST(Snapshots, Rejections) {
  FakeClock clock;
  SessionController c("x", small_config(), clock.fn());
  json good = snapshot_to_json(c.snapshot());
  EXPECT_NO_THROW(snapshot_from_json(good));
  for (const char* key : {"epoch", "config", "plan", "view", "validation"}) {
    json j = good;
    j.erase(key);
    EXPECT_THROW(snapshot_from_json(j), ProtocolError) << key;
  }
  json j = good;
  j["phase"] = "sleeping";
  EXPECT_THROW(snapshot_from_json(j), ProtocolError);
}

TEST(Controller, Hello) {
  SessionController c("abc", small_config());
  const Message hello = c.hello();
  EXPECT_EQ(hello.type, "hello");
  EXPECT_EQ(hello.body["protocol_version"], "1");
  EXPECT_EQ(hello.body["session_id"], "abc");
  EXPECT_EQ(config_from_json(hello.body["default_config"]), small_config());
}

TEST(Controller, InitialSnapshot) {
  SessionController c("abc", small_config());
  const Snapshot s = c.snapshot();
  EXPECT_EQ(s.epoch, 0u);
  EXPECT_TRUE(s.loss_history.empty());
  EXPECT_FALSE(s.playing);
  EXPECT_FALSE(s.current_event);
  EXPECT_EQ(s.validation.prediction.size(), 2u);
  EXPECT_EQ(s.validation.input.size(), 6u);
}

TEST(Controller, OverviewStepIsOneEpoch) {
  SessionController c("a", small_config());
  for (std::size_t e = 1; e <= 3; ++e) {
    const Snapshot s = only_snapshot(c.handle(cmd::Step{}));
    EXPECT_EQ(s.epoch, e);
    EXPECT_EQ(s.loss_history.size(), e);
    EXPECT_EQ(s.current_event->detail, StepDetail::kEpochDone);
  }
}

TEST(Controller, CellStepIsOneEvent) {
  SessionController c("a", small_config());
  c.handle(cmd::SetView{{ViewMode::kCell, 0}});
  const StepDetail order[] = {
      StepDetail::kLayerInput, StepDetail::kGateActivations,
      StepDetail::kCellStateUpdate, StepDetail::kOutputActivation,
      StepDetail::kLayerInput};
  for (std::size_t i = 0; i < 5; ++i) {
    const Snapshot s = only_snapshot(c.handle(cmd::Step{}));
    ASSERT_TRUE(s.current_event);
    EXPECT_EQ(s.current_event->index, i);
    EXPECT_EQ(s.current_event->detail, order[i]);
    EXPECT_EQ(s.plan_cursor, i + 1);
    ASSERT_TRUE(s.cell);
    EXPECT_EQ(s.cell->timestep, s.current_event->timestep);
    EXPECT_EQ(s.cell->values.count("f"), 1u);
    EXPECT_EQ(s.epoch, 0u);
  }
}

TEST(Controller, CellViewMatchesEventPayload) {
  SessionController c("a", small_config());
  c.handle(cmd::SetView{{ViewMode::kCell, 0}});
  c.handle(cmd::Step{});
  const Snapshot s = only_snapshot(c.handle(cmd::Step{}));
  for (const auto& [name, v] : s.current_event->payload.vectors) {
    EXPECT_EQ(s.cell->values.at(name), v) << name;
  }
}

TEST(Controller, ResetRestoresFreshState) {
  SessionController c("a", small_config());
  const Snapshot fresh = c.snapshot();
  c.handle(cmd::Step{});
  c.handle(cmd::Step{});
  const Snapshot s = only_snapshot(c.handle(cmd::Reset{}));
  EXPECT_EQ(s.epoch, 0u);
  EXPECT_TRUE(s.loss_history.empty());
  EXPECT_EQ(s, fresh);
  // Reset is idempotent.
  EXPECT_EQ(only_snapshot(c.handle(cmd::Reset{})), fresh);
}

TEST(Controller, IdempotentCommands) {
  SessionController c("a", small_config());
  c.handle(cmd::Step{});
  const Snapshot once = only_snapshot(c.handle(cmd::Pause{}));
  EXPECT_EQ(only_snapshot(c.handle(cmd::Pause{})), once);
  const Snapshot view1 = only_snapshot(c.handle(cmd::SetView{{ViewMode::kCell, 0}}));
  EXPECT_EQ(only_snapshot(c.handle(cmd::SetView{{ViewMode::kCell, 0}})), view1);
}

TEST(Controller, RejectedCommandsLeaveStateAlone) {
  SessionController c("a", small_config());
  c.handle(cmd::Step{});
  const Snapshot before = c.snapshot();
  const std::vector<Command> bad = {
      cmd::SetParam{HyperParam::kLearningRate, 5.0},
      cmd::SetParam{HyperParam::kBatchSize, 0.0},
      cmd::SetView{{ViewMode::kCell, 3}},
      cmd::SetPace{0.0},
      cmd::EditArch{{ArchitectureEdit::Kind::kRemoveLayer, 0}},
  };
  for (const Command& command : bad) {
    auto out = c.handle(command);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].type, "error");
    EXPECT_TRUE(out[0].body.contains("message"));
    EXPECT_EQ(c.snapshot(), before);
  }
}

TEST(Controller, ArchitectureEditsRestart) {
  SessionController c("a", small_config());
  c.handle(cmd::Step{});
  ArchitectureEdit add;
  add.kind = ArchitectureEdit::Kind::kAddLayer;
  add.at = 1;
  Snapshot s = only_snapshot(c.handle(cmd::EditArch{add}));
  EXPECT_EQ(s.config.layer_count, 2u);
  EXPECT_EQ(s.epoch, 0u);
  s = only_snapshot(c.handle(cmd::SelectTask{Task::kAbab}));
  EXPECT_EQ(s.config.task, Task::kAbab);
  EXPECT_EQ(s.validation.input_text.size(), s.config.window);
}

TEST(Controller, SetParamKeepsHistory) {
  SessionController c("a", small_config());
  c.handle(cmd::Step{});
  const Snapshot s =
      only_snapshot(c.handle(cmd::SetParam{HyperParam::kLearningRate, 0.002}));
  EXPECT_EQ(s.config.learning_rate, 0.002);
  EXPECT_EQ(s.loss_history.size(), 1u);
}

TEST(Controller, JumpPhase) {
  SessionController c("a", small_config());
  Snapshot s = only_snapshot(c.handle(cmd::JumpPhase{Phase::kTraining}));
  EXPECT_EQ(s.phase, Phase::kTraining);
  EXPECT_EQ(s.current_event->detail, StepDetail::kLossComputed);
  EXPECT_EQ(s.epoch, 0u);
  s = only_snapshot(c.handle(cmd::JumpPhase{Phase::kPrediction}));
  EXPECT_EQ(s.plan_cursor, 0u);
  EXPECT_EQ(s.phase, Phase::kPrediction);
}

TEST(Controller, HeadlessAndInteractiveAgree) {
  NetworkConfig config = small_config();
  TrainingSession headless = create_session(config);
  for (int e = 0; e < 4; ++e) run_epoch(headless);

  SessionController c("a", config);
  // Mix of views: micro steps, a phase jump, then whole epochs.
  c.handle(cmd::SetView{{ViewMode::kCell, 0}});
  for (int i = 0; i < 9; ++i) c.handle(cmd::Step{});
  c.handle(cmd::JumpPhase{Phase::kTraining});
  c.handle(cmd::SetView{{ViewMode::kOverview, 0}});
  for (int i = 0; i < 4; ++i) c.handle(cmd::Step{});
  EXPECT_EQ(c.session().epoch, 4u);
  EXPECT_EQ(history_csv(c.session().history), history_csv(headless.history));
  EXPECT_EQ(c.session().params, headless.params);
}

TEST(Controller, PlayFollowsThePacer) {
  FakeClock clock;
  SessionController c("a", small_config(), clock.fn());
  c.handle(cmd::SetView{{ViewMode::kCell, 0}});
  EXPECT_FALSE(c.next_tick_in());
  c.handle(cmd::SetPace{2.0});
  Snapshot s = only_snapshot(c.handle(cmd::Play{}));
  EXPECT_TRUE(s.playing);
  EXPECT_EQ(*c.next_tick_in(), 500ms);
  std::size_t snapshots = 0;
  for (int i = 0; i < 30; ++i) {
    clock.now += 100ms;
    for (const auto& m : c.on_timer()) {
      EXPECT_EQ(m.type, "snapshot");
      ++snapshots;
    }
  }
  EXPECT_EQ(snapshots, 6u);
  EXPECT_EQ(c.snapshot().plan_cursor, 6u);
  c.handle(cmd::Pause{});
  clock.now += 10s;
  EXPECT_TRUE(c.on_timer().empty());
  EXPECT_FALSE(c.next_tick_in());
}

TEST(Controller, OverviewPlayAdvancesByPhase) {
  FakeClock clock;
  SessionController c("a", small_config(), clock.fn());
  c.handle(cmd::Play{});
  clock.now += 1s;
  auto out = c.on_timer();
  ASSERT_EQ(out.size(), 1u);
  // One tick runs the whole prediction segment.
  const Snapshot first = snapshot_from_json(out[0].body);
  EXPECT_EQ(first.current_event->detail, StepDetail::kOutputActivation);
  EXPECT_EQ(first.plan_cursor, forward_event_count(1, 7));
  clock.now += 2s;
  out = c.on_timer();
  ASSERT_EQ(out.size(), 2u);
  const Snapshot s = snapshot_from_json(out[1].body);
  EXPECT_EQ(s.epoch, 1u);
  EXPECT_EQ(s.phase, Phase::kPrediction);
}

TEST(Envelope, TextHandling) {
  SessionController c("a", small_config());
  auto out = c.handle_text(command_text({{"cmd", "step"}}, 1));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].type, "snapshot");
  EXPECT_EQ(out[0].body["epoch"], 1);

  out = c.handle_text("{not json");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].type, "error");
  EXPECT_NE(out[0].body["message"].get<std::string>().find("malformed"),
            std::string::npos);
  EXPECT_TRUE(out[0].body["in_reply_to"].is_null());

  // Replayed seq.
  out = c.handle_text(command_text({{"cmd", "step"}}, 1));
  EXPECT_EQ(out[0].type, "error");
  EXPECT_EQ(out[0].body["in_reply_to"], 1);
  EXPECT_EQ(c.session().epoch, 1u);

  out = c.handle_text(command_text({{"cmd", "nope"}}, 2));
  EXPECT_EQ(out[0].type, "error");
  EXPECT_EQ(out[0].body["in_reply_to"], 2);

  out = c.handle_text(R"({"type":"snapshot","seq":3,"body":{}})");
  EXPECT_EQ(out[0].type, "error");
  out = c.handle_text(R"({"type":"command","body":{"cmd":"step"}})");
  EXPECT_EQ(out[0].type, "error");
  out = c.handle_text(
      command_text({{"cmd", "set_param"}, {"name", "batch_size"}, {"value", 99}}, 4));
  EXPECT_EQ(out[0].type, "error");
  EXPECT_EQ(out[0].body["in_reply_to"], 4);

  out = c.handle_text(command_text({{"cmd", "step"}}, 10));
  EXPECT_EQ(out[0].type, "snapshot");
  EXPECT_EQ(out[0].body["epoch"], 2);
}

TEST(Envelope, Shape) {
  const json e = envelope({"snapshot", json{{"k", 1}}}, 42);
  EXPECT_EQ(e, json::parse(R"({"type":"snapshot","seq":42,"body":{"k":1}})"));
}

TEST(Csv, Format) {
  EXPECT_EQ(history_csv_header(), "epoch,train_loss,validation_loss");
  EXPECT_EQ(history_csv_row({3, 0.5, 0.125}), "3,0.5,0.125");
  EXPECT_EQ(history_csv({{1, 1.0, 2.0}, {2, 0.1, 0.2}}),
            "epoch,train_loss,validation_loss\n1,1,2\n2,0.1,0.2\n");
  // Shortest round-trip form.
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(x)), x);
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(Jsonl, OneEventPerLine) {
  TrainingSession s = create_session(small_config());
  StepPlan plan = compile_epoch_plan(s);
  std::ostringstream out;
  write_plan_jsonl(out, plan, false);
  std::istringstream in(out.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const StepEvent ev = event_from_json(json::parse(line));
    EXPECT_EQ(ev.index, n);
    EXPECT_EQ(ev.detail, plan.events[n].detail);
    EXPECT_TRUE(ev.payload.vectors.empty());
    ++n;
  }
  EXPECT_EQ(n, plan.size());
  EXPECT_EQ(n, plan_event_count(1, unrolled_steps(s.config)));
}

}  // namespace
}  // namespace rnnscope

namespace rnnscope {
namespace {

// Abscissae overflow to infinity, so the inputs and the loss become NaN.
NetworkConfig diverging_config() {
  NetworkConfig c = small_config();
  c.dx = 1e308;
  return c;
}

TEST(Controller, DivergedSessionRejectsTraining) {
  SessionController c("d", diverging_config());
  Snapshot s = only_snapshot(c.handle(cmd::Step{}));
  ASSERT_TRUE(s.diverged);
  EXPECT_FALSE(s.diverged_reason.empty());
  // NaN losses never compare equal, so compare the wire form.
  const Snapshot before = c.snapshot();
  const std::string before_text = serialize(snapshot_to_json(before));
  for (const Command& command :
       std::vector<Command>{cmd::Step{}, cmd::Play{}, cmd::JumpPhase{Phase::kTraining}}) {
    auto out = c.handle(command);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].type, "error");
    EXPECT_NE(out[0].body["message"].get<std::string>().find("diverged"),
              std::string::npos);
    EXPECT_EQ(serialize(snapshot_to_json(c.snapshot())), before_text);
  }
  // The diverged snapshot still parses back to the same bytes.
  EXPECT_EQ(serialize(snapshot_to_json(snapshot_from_json(json::parse(before_text)))),
            before_text);
  // Reset clears the flag.
  EXPECT_FALSE(only_snapshot(c.handle(cmd::Reset{})).diverged);
}

}  // namespace
}  // namespace rnnscope
