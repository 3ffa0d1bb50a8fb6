#![no_main]

use ibmap::Structure;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(g) = Structure::from_json(text) {
        // The accepted form is canonical, so re-encoding must parse back.
        assert_eq!(Structure::from_json(&g.to_json()).unwrap(), g);
        assert!(g.edges().all(|(x, y)| x < y && y < g.n()));
    }
});
