// Detects, uniformizes and redacts a short ruling, printing the result.

#include <iostream>

#include "anon/anon.hpp"

int main() {
  const char* ruling =
      "Urteil vom 12. Mai 2021\n"
      "Besetzung\n"
      "Bundesrichter Muster, Präsident,\n"
      "Verfahrensbeteiligte\n"
      "Anna Keller, Beschwerdeführerin,\n"
      "gegen\n"
      "Baumann Immobilien AG, Beschwerdegegnerin.\n"
      "Sachverhalt:\n"
      "A.\n"
      "Anna Keller mietete von der Baumann Immobilien AG eine Wohnung. "
      "Die Baumann Immobilien AG kündigte den Vertrag. Anna Keller focht die Kündigung an "
      "und gab als Kontakt anna.keller@example.ch an.";

  const auto doc = anon::ingest_text(ruling, anon::Language::de);
  const auto cfg = anon::DetectorConfig::defaults();
  const auto detected =
      anon::run_detectors(doc, cfg, {anon::DetectorKind::regex, anon::DetectorKind::conventional});
  const auto spans = anon::uniformize(doc, detected.spans);

  std::cout << "detected " << detected.spans.size() << " spans, " << spans.size() << " after uniformizing\n";
  for (const auto& s : spans)
    std::cout << "  [" << s.span.start << "," << s.span.end << ") " << s.label << " " << anon::to_string(s.source)
              << " \"" << anon::unicode::encode_utf8(s.surface) << "\"\n";

  const auto map = anon::assign_placeholders(doc, spans, anon::PlaceholderPolicy::letters);
  const auto out = anon::render(doc, spans, map);
  std::cout << "\n" << anon::unicode::encode_utf8(out.text) << "\n";
  return anon::restore(out) == doc.text ? 0 : 1;
}
