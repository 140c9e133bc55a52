#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "mock_backend.hpp"
#include "sdft/distiller.hpp"

using namespace sdft;
using sdft_test::MockBackend;

TEST_CASE("extract_math_answer") {
  auto val = [](int64_t n, int64_t d = 1) { return Rational{n, d}; };

  SUBCASE("plain phrase") {
    CHECK(extract_math_answer("Lisa earned more. The answer is 15.") == val(15));
  }
  SUBCASE("currency and markup") {
    CHECK(extract_math_answer(
              "So, Lisa earned $30 - $15 = $15 more than Tommy. Therefore, the answer is $15.") ==
          val(15));
    CHECK(extract_math_answer("The answer is **42**.") == val(42));
    CHECK(extract_math_answer("the answer is 1,234.") == val(1234));
  }
  SUBCASE("last occurrence wins") {
    CHECK(extract_math_answer("The answer is 3. Wait, the answer is 7.") == val(7));
  }
  SUBCASE("case-insensitive phrase") {
    CHECK(extract_math_answer("THE ANSWER IS -8") == val(-8));
  }
  SUBCASE("decimals parse exactly") {
    CHECK(extract_math_answer("The answer is 2.50") == val(5, 2));
    CHECK(extract_math_answer("The answer is 2.5") == extract_math_answer("the answer is 2.50"));
  }
  SUBCASE("fallback: last standalone number in the final line") {
    CHECK(extract_math_answer("work\nwork\ntotal cost: 12 dollars or 13 euros") == val(13));
  }
  SUBCASE("absent") {
    CHECK(!extract_math_answer("I am not sure.").has_value());
    CHECK(!extract_math_answer("").has_value());
    CHECK(!extract_math_answer("The answer is unclear.").has_value());
  }
}

TEST_CASE("select") {
  SUBCASE("absent distilled keeps original") {
    auto [sel, used] = select(std::nullopt, "y", Validator::math_answer);
    CHECK(sel == "y");
    CHECK(!used);
  }
  SUBCASE("empty distilled counts as failure") {
    auto [sel, used] = select(std::string{}, "y", Validator::none);
    CHECK(sel == "y");
    CHECK(!used);
  }
  SUBCASE("no-validator acceptance") {
    auto [sel, used] = select(std::string{"rewritten"}, "y", Validator::none);
    CHECK(sel == "rewritten");
    CHECK(used);
  }
  SUBCASE("math pair with matching answers accepted") {
    std::string original =
        "Lisa earned $30. Tommy earned $15. Lisa earned $15 more than Tommy.\nThe answer is 15.";
    std::string distilled =
        "Here is the response:\nLisa earned $60 * 1/2 = $30, and Tommy earned $30 * 1/2 = $15. "
        "So, Lisa earned $30 - $15 = $15 more than Tommy. Therefore, the answer is $15.";
    auto [sel, used] = select(distilled, original, Validator::math_answer);
    CHECK(sel == distilled);
    CHECK(used);
  }
  SUBCASE("mismatched math answer rejected") {
    auto [sel, used] =
        select(std::string{"The answer is 14."}, "The answer is 15.", Validator::math_answer);
    CHECK(sel == "The answer is 15.");
    CHECK(!used);
  }
  SUBCASE("unextractable math answer rejected") {
    auto [sel, used] = select(std::string{"no idea"}, "The answer is 15.", Validator::math_answer);
    CHECK(!used);
  }
}

TEST_CASE("validator_for maps task tags") {
  CHECK(validator_for(TaskTag::math) == Validator::math_answer);
  CHECK(validator_for(TaskTag::general) == Validator::none);
  CHECK(validator_for(TaskTag::code) == Validator::none);
  CHECK(validator_for(std::nullopt) == Validator::none);
}

namespace {

std::vector<DistillationRecord> make_records(size_t n, size_t n_eligible) {
  std::vector<DistillationRecord> records;
  for (size_t i = 0; i < n; ++i) {
    DistillationRecord rec;
    rec.example.instruction = "q" + std::to_string(i);
    rec.example.response = "orig" + std::to_string(i);
    rec.example.id = std::to_string(i);
    if (i < n_eligible) {
      rec.distilled = "distilled" + std::to_string(i);
      rec.selected = *rec.distilled;
      rec.used_distilled = true;
    } else {
      rec.selected = rec.example.response;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

TEST_CASE("blend mix ratio endpoints") {
  auto records = make_records(20, 12);
  auto at0 = blend(records, 0.0, 7);
  for (size_t i = 0; i < 20; ++i) CHECK(at0.examples[i].response == records[i].example.response);

  auto at1 = blend(records, 1.0, 7);
  for (size_t i = 0; i < 12; ++i) CHECK(at1.examples[i].response == *records[i].distilled);
  for (size_t i = 12; i < 20; ++i) CHECK(at1.examples[i].response == records[i].example.response);
}

TEST_CASE("blend count and determinism") {
  auto records = make_records(1200, 1000);
  auto chosen = blend_chosen(records, 0.5, 7);
  CHECK(chosen.size() == 500);
  CHECK(blend_chosen(records, 0.5, 7) == chosen);
  CHECK(blend_chosen(records, 0.5, 8) != chosen);
}

TEST_CASE("blend nesting across ratios") {
  auto records = make_records(300, 200);
  std::set<size_t> prev;
  for (double ratio : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0}) {
    auto chosen = blend_chosen(records, ratio, 99);
    std::set<size_t> cur(chosen.begin(), chosen.end());
    CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
    prev = std::move(cur);
  }
}

TEST_CASE("blend output responses stay within {original, distilled}") {
  auto records = make_records(100, 60);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    double ratio = (rng() % 101) / 100.0;
    auto out = blend(records, ratio, rng());
    for (size_t i = 0; i < records.size(); ++i) {
      const auto& resp = out.examples[i].response;
      bool ok = resp == records[i].example.response ||
                (records[i].distilled && resp == *records[i].distilled);
      CHECK(ok);
      if (!records[i].used_distilled) CHECK(resp == records[i].example.response);
    }
  }
}

TEST_CASE("distill_one against mock backend") {
  MockBackend mock;
  BackendConfig cfg;
  cfg.base_url = mock.url();
  cfg.retries = 0;
  cfg.backoff_initial_ms = 1;
  InferenceClient client(cfg);
  auto tmpl = builtin("using");

  TaskExample ex;
  ex.instruction = "How much more did Lisa earn?";
  ex.response = "Lisa earned $15 more. The answer is 15.";
  ex.task = TaskTag::math;
  ex.id = "0";

  SUBCASE("matching rewrite accepted") {
    mock.set_responder([](const std::string&) {
      return "  So Lisa earned $15 more than Tommy. Therefore, the answer is $15.  ";
    });
    auto rec = distill_one(ex, tmpl, client, {});
    CHECK(rec.used_distilled);
    CHECK(rec.validator == Validator::math_answer);
    CHECK(rec.selected == *rec.distilled);
    CHECK(rec.distilled->front() == 'S');  // trimmed
    CHECK(rec.prompt.find(ex.instruction) != std::string::npos);
    CHECK(rec.prompt.find(ex.response) != std::string::npos);
  }
  SUBCASE("wrong answer keeps original") {
    mock.set_responder([](const std::string&) { return "The answer is 14."; });
    auto rec = distill_one(ex, tmpl, client, {});
    CHECK(!rec.used_distilled);
    CHECK(rec.selected == ex.response);
  }
  SUBCASE("generation failure keeps original") {
    mock.set_status_script({400});
    auto rec = distill_one(ex, tmpl, client, {});
    CHECK(!rec.distilled.has_value());
    CHECK(!rec.used_distilled);
    CHECK(rec.selected == ex.response);
  }
  SUBCASE("input text is folded into the prompt") {
    mock.set_responder([](const std::string&) { return "The answer is 15."; });
    TaskExample with_input = ex;
    with_input.input = "EXTRA-CONTEXT";
    auto rec = distill_one(with_input, tmpl, client, {});
    CHECK(rec.prompt.find("EXTRA-CONTEXT") != std::string::npos);
  }
}

TEST_CASE("distill_dataset report and blending") {
  MockBackend mock;
  // Valid rewrite for even ids, wrong math answer for odd ids.
  mock.set_responder([](const std::string& prompt) {
    // id is embedded in the instruction text
    size_t pos = prompt.find("question #");
    int id = std::stoi(prompt.substr(pos + 10));
    if (id % 2 == 0) return std::string("Rewritten. The answer is 15.");
    return std::string("Rewritten. The answer is 14.");
  });
  BackendConfig cfg;
  cfg.base_url = mock.url();
  cfg.retries = 0;
  cfg.parallelism = 4;
  InferenceClient client(cfg);

  Dataset d;
  for (int i = 0; i < 20; ++i) {
    TaskExample ex;
    ex.instruction = "question #" + std::to_string(i);
    ex.response = "Original. The answer is 15.";
    ex.task = TaskTag::math;
    ex.id = std::to_string(i);
    d.examples.push_back(std::move(ex));
  }

  auto out = distill_dataset(d, builtin("using"), client, {}, 1.0, 7);
  CHECK(out.report.total == 20);
  CHECK(out.report.accepted == 10);
  CHECK(out.report.rejected == 10);
  CHECK(out.report.failed == 0);
  CHECK(out.report.acceptance_rate == doctest::Approx(0.5));
  CHECK(out.report.blended_distilled == 10);
  CHECK(out.report.acceptance_rate_by_task.at("math") == doctest::Approx(0.5));

  // mix_ratio=1: every eligible row carries its distilled text
  size_t distilled_rows = 0;
  for (size_t i = 0; i < 20; ++i)
    if (out.dataset.examples[i].response == "Rewritten. The answer is 15.") ++distilled_rows;
  CHECK(distilled_rows == 10);

  SUBCASE("all-rejecting mock leaves the dataset unchanged") {
    mock.set_responder([](const std::string&) { return std::string("The answer is 99."); });
    auto out2 = distill_dataset(d, builtin("using"), client, {}, 1.0, 7);
    CHECK(out2.report.acceptance_rate == 0.0);
    for (size_t i = 0; i < 20; ++i)
      CHECK(out2.dataset.examples[i].response == d.examples[i].response);
  }
}

TEST_CASE("audit and report serialization") {
  auto records = make_records(3, 2);
  auto audit = emit_audit_jsonl(records);
  CHECK(std::count(audit.begin(), audit.end(), '\n') == 3);
  CHECK(audit.find("\"used_distilled\":true") != std::string::npos);

  DistillationReport report;
  report.total = 3;
  report.accepted = 2;
  report.acceptance_rate = 2.0 / 3.0;
  auto json_text = emit_report_json(report);
  CHECK(json_text.find("\"accepted\": 2") != std::string::npos);
}
