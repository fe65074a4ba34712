// Rates two mock services over a few middle languages, then predicts the
// rating of the pipeline that runs one after the other.

#include <iostream>

#include "biasrate/biasrate.hpp"

int main() {
  using namespace biasrate;
  const std::vector<std::string> middles = {"es", "fr", "hi"};
  const auto specs = SpecSet::reference_with_pure();
  const auto extractor = Extractor::english_gender();

  std::vector<RatedComponent> stages;
  for (auto behavior : {"flip", "equalize"}) {
    auto service = mock_translator(MockBehavior::parse(behavior));
    auto report = rate_service(service, middles, specs, extractor, RatingConfig{});
    for (const auto& l : report.languages) std::cout << service->id() << " via " << l.language << ": " << *l.rating << "\n";
    std::cout << service->id() << " overall: " << *report.overall << "\n";
    stages.push_back(rated_component_from_report(json::parse(report_json_text(report))));
  }
  std::cout << "pipeline " << stages[0].id << " then " << stages[1].id << ": " << compose_chain(stages) << "\n";
}
