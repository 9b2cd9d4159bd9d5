#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "triform/bench.hpp"
#include "triform/error.hpp"

using namespace triform;
using namespace triform::bench;

TEST_CASE("concept inventory") {
  const auto& specs = concept_specs();
  REQUIRE(specs.size() == 18);
  // arithmetic 4, logic 4, relational 4, causal 3, spatial 3
  std::map<Domain, int> per_domain;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    CHECK(specs[i].concept_id == static_cast<int>(i) + 1);
    CHECK(!specs[i].key.empty());
    ++per_domain[specs[i].domain];
  }
  CHECK(per_domain[Domain::arithmetic] == 4);
  CHECK(per_domain[Domain::logic] == 4);
  CHECK(per_domain[Domain::relational] == 4);
  CHECK(per_domain[Domain::causal] == 3);
  CHECK(per_domain[Domain::spatial] == 3);
  CHECK(concept_spec(6).name == "Modus ponens");
  CHECK_THROWS_AS(concept_spec(0), InvalidArgument);
  CHECK_THROWS_AS(concept_spec(19), InvalidArgument);
}

TEST_CASE("composition of the generated set") {
  const auto set = generate_benchmark(0);
  REQUIRE(set.stimuli.size() == 324);
  std::map<Form, int> per_form;
  std::map<int, int> per_concept;
  std::set<std::string> ids;
  for (const auto& s : set.stimuli) {
    ++per_form[s.form];
    ++per_concept[s.concept_id];
    ids.insert(s.stimulus_id);
    CHECK(s.domain == concept_spec(s.concept_id).domain);
  }
  for (Form f : kAllForms) CHECK(per_form[f] == 54);
  for (int c = 1; c <= 18; ++c) CHECK(per_concept[c] == 18);
  CHECK(ids.size() == 324);
  CHECK(set.stimuli.front().stimulus_id == "c01_i0_en");
  CHECK(set.stimuli.back().stimulus_id == "c18_i2_structured");
  CHECK(validate_stimulus_set(set).ok());
}

TEST_CASE("rendered texts carry the canonical conclusion") {
  for (int c = 1; c <= 18; ++c) {
    const auto inst = canonical_instances(c, 7);
    REQUIRE(inst.size() == 3);
    std::set<std::string> conclusions;
    for (const auto& i : inst) {
      CHECK(solve(i) == i.conclusion);
      conclusions.insert(i.conclusion);
      for (Form f : kAllForms) {
        const auto text = render_form(i, f);
        CAPTURE(text);
        CHECK(text.find(conclusion_surface(i, f)) != std::string::npos);
      }
    }
    CHECK(conclusions.size() == 3);
  }
}

TEST_CASE("forms of an instance are distinct texts") {
  const auto inst = canonical_instances(1, 0).front();
  std::set<std::string> texts;
  for (Form f : kAllForms) texts.insert(render_form(inst, f));
  CHECK(texts.size() == 6);
  CHECK_THROWS_AS(render_form(inst, static_cast<Form>(9)), InvalidArgument);
}

TEST_CASE("generation is a function of the seed") {
  CHECK(to_jsonl(generate_benchmark(3)) == to_jsonl(generate_benchmark(3)));
  CHECK(to_jsonl(generate_benchmark(3)) != to_jsonl(generate_benchmark(4)));
}

TEST_CASE("validation catches broken sets") {
  auto set = generate_benchmark(0);
  SUBCASE("missing stimulus") {
    set.stimuli.pop_back();
    const auto r = validate_stimulus_set(set);
    CHECK(!r.ok());
    CHECK(r.violations.size() >= 3);  // total, form and concept counts
  }
  SUBCASE("duplicate id") {
    set.stimuli[1].stimulus_id = set.stimuli[0].stimulus_id;
    CHECK(!validate_stimulus_set(set).ok());
  }
  SUBCASE("wrong domain") {
    set.stimuli[0].domain = Domain::spatial;
    CHECK(!validate_stimulus_set(set).ok());
  }
  SUBCASE("invalid utf8") {
    set.stimuli[0].text = "\xff\xfe";
    CHECK(!validate_stimulus_set(set).ok());
  }
  SUBCASE("empty text") {
    set.stimuli[0].text.clear();
    CHECK(!validate_stimulus_set(set).ok());
  }
}

TEST_CASE("stimulus file round trip") {
  const auto set = generate_benchmark(11);
  std::stringstream ss;
  write_stimulus_file(set, ss);
  const auto back = read_stimulus_file(ss);
  REQUIRE(back.stimuli.size() == set.stimuli.size());
  CHECK(back.seed == 11);
  for (std::size_t i = 0; i < set.stimuli.size(); ++i) {
    CHECK(back.stimuli[i].stimulus_id == set.stimuli[i].stimulus_id);
    CHECK(back.stimuli[i].text == set.stimuli[i].text);
    CHECK(back.stimuli[i].form == set.stimuli[i].form);
  }
  CHECK(to_jsonl(back) == to_jsonl(set));
  const auto text = to_jsonl(set);
  CHECK(text.back() == '\n');
  CHECK(text.find('\r') == std::string::npos);

  std::istringstream labels_in(text);
  const auto labels = read_label_table(labels_in);
  CHECK(labels.size() == 324);
  CHECK(labels.rows[7].stimulus_id == set.stimuli[7].stimulus_id);
}

TEST_CASE("malformed stimulus lines are rejected") {
  std::istringstream in("{\"benchmark_version\":\"triform-bench/1.0\",\"seed\":0,\"count\":1}\n{\"stimulus_id\":3}\n");
  CHECK_THROWS_AS(read_stimulus_file(in), FormatError);
}

TEST_CASE("tokenizer") {
  CHECK(tokenize("  a b  ").size() == 2);
  CHECK(tokenize("f(x)=y;") == std::vector<std::string>{"f", "(", "x", ")", "=", "y", ";"});
  CHECK(tokenize("").empty());
  // Ideographic full stop is punctuation; CJK ideographs are not.
  CHECK(tokenize("\xe5\x9b\xa0\xe6\x9e\x9c\xe3\x80\x82").size() == 2);
}

TEST_CASE("surface features") {
  const auto f = surface_features("a a b");
  CHECK(f.token_count == 3);
  CHECK(f.type_token_ratio == doctest::Approx(2.0 / 3.0));
  // code points: a, ' ', a, ' ', b -> p = {2/5, 2/5, 1/5}
  const double h = -(0.4 * std::log(0.4) * 2 + 0.2 * std::log(0.2));
  CHECK(f.char_entropy == doctest::Approx(h));
  CHECK_THROWS_AS(surface_features("  "), InvalidArgument);
}
