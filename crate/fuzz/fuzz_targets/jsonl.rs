#![no_main]

use hofbutter::butterfly::{read_jsonl, write_jsonl};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(diagram) = read_jsonl(data) else { return };
    let mut out = Vec::new();
    write_jsonl(&diagram, &mut out).expect("write to memory");
    let again = read_jsonl(out.as_slice()).expect("own output reads back");
    assert_eq!(again, diagram);
});
