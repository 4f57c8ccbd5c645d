// Writes the instance and canonical files used by the CLI tests.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hloc/corpus.hpp"
#include "support.hpp"
#include "synthetic.hpp"

using namespace hloc;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures DIR\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);

  auto planted = testing::planted_corpus(150, 5);
  save_records(dir / "planted.jsonl", planted);
  for (auto& r : planted) r.gold_index.reset();
  save_records(dir / "unlabeled.jsonl", planted);

  std::vector<GenerationRecord> fig;
  for (int i = 0; i < 3; ++i) {
    GenerationRecord r = testing::make_record(testing::figure1_tokens(), Language::Python, testing::figure1_prefix(),
                                              true, "fig" + std::to_string(i));
    r.problem_id = "check_smaller";
    fig.push_back(r);
  }
  GenerationRecord ok = testing::make_record({"return", " all", "(", "a", " >", " b", " for", " a", ",", " b", " in",
                                              " zip", "(", "tup1", ",", " tup2", "))"},
                                             Language::Python, testing::figure1_prefix(), true, "fig-correct");
  ok.problem_id = "check_smaller";
  fig.push_back(ok);
  save_records(dir / "figure1.jsonl", fig);

  std::ofstream canon(dir / "figure1_canon.jsonl");
  for (const char* source : {"return all(i > j for i, j in zip(tup1, tup2))",
                             "return all(map(lambda p: p[0] > p[1], zip(tup1, tup2)))"}) {
    canon << nlohmann::json{{"problem_id", "check_smaller"}, {"language", "python"}, {"source", source}}.dump() << '\n';
  }

  std::ofstream bad(dir / "bad.jsonl");
  nlohmann::json broken = record_to_json(fig[0]);
  broken["steps"].erase(broken["steps"].size() - 1);
  broken["chosen"].erase(broken["chosen"].size() - 1);
  bad << record_to_json(fig[1]).dump() << '\n' << broken.dump() << '\n' << "{not json\n";

  std::ofstream src(dir / "snippet.py");
  src << "def f(tup1, tup2):\n    for a, b in zip(tup1, tup2):\n        total = a + b\n    return total\n";
  return 0;
}
