//! Bounded exploration of the corpus with safety checking on.

use std::path::PathBuf;
use std::time::Instant;

use aeff::explore::{ExploreOptions, System};
use aeff::surface::parse_program;

fn corpus_file(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(format!("{name}.aeff"));
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn sweep() {
    let names = std::env::var("SWEEP").unwrap_or_else(|_| "trivial,nonconfluence".into());
    for name in names.split(',') {
        let t = Instant::now();
        let (sys, s) = System::load(&parse_program(&corpus_file(name)).unwrap(), true).unwrap();
        let rep = sys.explore(s, &ExploreOptions { parallel: true, ..Default::default() });
        println!(
            "{name}: states={} terminals={} violations={} builtin={} depth={} truncated={} {:?}",
            rep.states_visited,
            rep.terminal_states,
            rep.safety_violations.len(),
            rep.builtin_errors.len(),
            rep.max_depth_reached,
            rep.truncated,
            t.elapsed()
        );
        for v in rep.safety_violations.iter().take(3) {
            println!("  {:?} {:?} {:?}\n    {}\n    {}", v.kind, v.rule, v.path, v.detail, v.state);
        }
    }
}
