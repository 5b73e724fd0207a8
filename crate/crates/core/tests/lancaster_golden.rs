use newscast_core::textproc::lancaster::stem;

#[test]
fn golden_fixture_matches() {
    let raw = include_str!("fixtures/lancaster_golden.tsv");
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for line in raw
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
    {
        let (word, expected) = line.split_once('\t').expect("word<TAB>stem");
        let got = stem(word);
        if got != expected {
            mismatches.push(format!("{word}: expected {expected}, got {got}"));
        }
        checked += 1;
    }
    assert!(checked > 3000, "fixture too small: {checked}");
    assert!(
        mismatches.is_empty(),
        "{} mismatches:\n{}",
        mismatches.len(),
        mismatches.join("\n")
    );
}
