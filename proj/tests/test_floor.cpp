#include <catch2/catch_amalgamated.hpp>

#include <s2sim/floor.hpp>

using namespace s2sim;

namespace {

// drive a machine from Idle into the given phase
void to_processing(FloorMachine& fm, std::int64_t ms = 0) {
    fm.on_turn_start(time_from_ms(ms));
    fm.on_turn_end(time_from_ms(ms + 100));
}

void to_agent_turn(FloorMachine& fm) {
    to_processing(fm);
    fm.on_agent_turn_started(fm.active_request());
}

}  // namespace

TEST_CASE("one clean turn walks all four phases", "[floor]") {
    FloorMachine fm;
    CHECK(fm.phase() == FloorPhase::Idle);
    CHECK_FALSE(fm.processing_entered_at().has_value());

    const auto start = fm.on_turn_start(time_from_ms(100.0));
    CHECK(start.kind == FloorActionKind::BeginUserTurn);
    CHECK(fm.phase() == FloorPhase::UserTurn);

    const auto end = fm.on_turn_end(time_from_ms(900.0));
    CHECK(end.kind == FloorActionKind::BeginProcessing);
    CHECK(end.request_id == 1);
    CHECK(fm.phase() == FloorPhase::Processing);
    CHECK(fm.active_request() == 1);
    REQUIRE(fm.processing_entered_at().has_value());
    CHECK(fm.processing_entered_at()->tenths == 9000);

    fm.on_agent_turn_started(1);
    CHECK(fm.phase() == FloorPhase::AgentTurn);
    CHECK(fm.active_request() == 0);

    fm.on_agent_playback_end();
    CHECK(fm.phase() == FloorPhase::Idle);

    // the next turn draws a fresh id
    fm.on_turn_start(time_from_ms(5000.0));
    CHECK(fm.on_turn_end(time_from_ms(5500.0)).request_id == 2);
}

TEST_CASE("signals outside their phase are protocol errors", "[floor]") {
    SECTION("TurnEnd from idle") {
        FloorMachine fm;
        CHECK_THROWS_AS(fm.on_turn_end(time_from_ms(0.0)), ProtocolError);
    }
    SECTION("TurnStart while the user already speaks") {
        FloorMachine fm;
        fm.on_turn_start(time_from_ms(0.0));
        CHECK_THROWS_AS(fm.on_turn_start(time_from_ms(10.0)), ProtocolError);
    }
    SECTION("abort must name the active request") {
        FloorMachine fm;
        to_processing(fm);
        CHECK_THROWS_AS(fm.abort_processing(99), ProtocolError);
        fm.abort_processing(fm.active_request());
        CHECK(fm.phase() == FloorPhase::Idle);
        CHECK_THROWS_AS(fm.abort_processing(1), ProtocolError);  // nothing active now
    }
    SECTION("agent turn must name the active request") {
        FloorMachine fm;
        to_processing(fm);
        CHECK_THROWS_AS(fm.on_agent_turn_started(99), ProtocolError);
    }
    SECTION("agent turn from idle") {
        FloorMachine fm;
        CHECK_THROWS_AS(fm.on_agent_turn_started(1), ProtocolError);
    }
    SECTION("playback end outside an agent turn") {
        FloorMachine fm;
        CHECK_THROWS_AS(fm.on_agent_playback_end(), ProtocolError);
        to_processing(fm);
        CHECK_THROWS_AS(fm.on_agent_playback_end(), ProtocolError);
    }
    SECTION("queued processing needs an idle floor") {
        FloorMachine fm;
        fm.on_turn_start(time_from_ms(0.0));
        CHECK_THROWS_AS(fm.begin_queued_processing(time_from_ms(10.0)), ProtocolError);
    }
}

TEST_CASE("half duplex ignores speech during agent audio", "[floor]") {
    FloorMachine fm;  // HalfDuplex is the default
    to_agent_turn(fm);

    const auto start = fm.on_turn_start(time_from_ms(2000.0));
    CHECK(start.kind == FloorActionKind::Ignored);
    CHECK(fm.phase() == FloorPhase::AgentTurn);
    CHECK(fm.suppressed_pending() == 1);

    // the TurnEnd of that suppressed speech is swallowed too
    const auto end = fm.on_turn_end(time_from_ms(2500.0));
    CHECK(end.kind == FloorActionKind::Ignored);
    CHECK(fm.suppressed_pending() == 0);

    fm.on_agent_playback_end();
    CHECK(fm.phase() == FloorPhase::Idle);
    CHECK(fm.on_turn_start(time_from_ms(3000.0)).kind == FloorActionKind::BeginUserTurn);
}

TEST_CASE("full duplex hands the floor to a barge-in", "[floor]") {
    FloorConfig cfg;
    cfg.mode = DuplexMode::FullDuplexBargeIn;
    FloorMachine fm(cfg);
    to_agent_turn(fm);

    const auto barge = fm.on_turn_start(time_from_ms(2000.0));
    CHECK(barge.kind == FloorActionKind::BargeIn);
    CHECK(fm.phase() == FloorPhase::UserTurn);

    const auto end = fm.on_turn_end(time_from_ms(2600.0));
    CHECK(end.kind == FloorActionKind::BeginProcessing);
    CHECK(end.request_id == 2);
}

TEST_CASE("speech during processing cancels and restarts by default", "[floor]") {
    FloorMachine fm;
    to_processing(fm);
    const auto old_id = fm.active_request();

    const auto dec = fm.on_turn_start(time_from_ms(500.0));
    CHECK(dec.kind == FloorActionKind::CancelAndRestart);
    CHECK(dec.request_id == old_id);
    CHECK(fm.phase() == FloorPhase::UserTurn);

    const auto end = fm.on_turn_end(time_from_ms(900.0));
    CHECK(end.kind == FloorActionKind::BeginProcessing);
    CHECK(end.request_id != old_id);
}

TEST_CASE("speech during processing can queue as a follow-up", "[floor]") {
    FloorConfig cfg;
    cfg.processing_speech = ProcessingSpeechPolicy::QueueAsFollowUp;
    FloorMachine fm(cfg);
    to_processing(fm);
    const auto first = fm.active_request();

    CHECK(fm.on_turn_start(time_from_ms(500.0)).kind == FloorActionKind::QueueFollowUp);
    CHECK(fm.phase() == FloorPhase::Processing);
    CHECK(fm.active_request() == first);

    CHECK(fm.on_turn_end(time_from_ms(800.0)).kind == FloorActionKind::FollowUpReady);
    CHECK(fm.phase() == FloorPhase::Processing);

    fm.on_agent_turn_started(first);
    fm.on_agent_playback_end();

    const auto queued = fm.begin_queued_processing(time_from_ms(4000.0));
    CHECK(queued == first + 1);
    CHECK(fm.phase() == FloorPhase::Processing);
    CHECK(fm.processing_entered_at()->tenths == 40000);
}

TEST_CASE("filler fires once per request after the threshold", "[floor]") {
    FloorMachine fm;
    to_processing(fm);  // processing entered at t=100
    CHECK_FALSE(fm.should_emit_filler(time_from_ms(3099.9)));
    CHECK(fm.should_emit_filler(time_from_ms(3100.0)));
    CHECK(fm.should_emit_filler(time_from_ms(3100.1)));
    fm.mark_filler_emitted();
    CHECK_FALSE(fm.should_emit_filler(time_from_ms(9000.0)));

    FloorConfig off;
    off.filler_enabled = false;
    FloorMachine silent(off);
    to_processing(silent);
    CHECK_FALSE(silent.should_emit_filler(time_from_ms(60000.0)));

    FloorMachine idle;
    CHECK_FALSE(idle.should_emit_filler(time_from_ms(60000.0)));
}

TEST_CASE("request ids can come from a shared allocator", "[floor]") {
    std::uint64_t next = 100;
    FloorMachine fm(FloorConfig{}, [&next] { return next++; });
    to_processing(fm);
    CHECK(fm.active_request() == 100);
    fm.on_agent_turn_started(100);
    fm.on_agent_playback_end();
    CHECK(fm.begin_queued_processing(time_from_ms(2000.0)) == 101);
}

TEST_CASE("floor configuration is validated", "[floor]") {
    FloorConfig bad;
    bad.interrupt_latency = Duration{-1};
    CHECK_THROWS_AS(FloorMachine(bad), ValidationError);
    FloorConfig worse;
    worse.filler_threshold = Duration{-1};
    CHECK_THROWS_AS(FloorMachine(worse), ValidationError);
    CHECK_NOTHROW(FloorMachine{});
}
