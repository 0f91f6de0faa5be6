#![no_main]

use libfuzzer_sys::fuzz_target;
use wgsqz::liouvillian::{read_dump, write_dump};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = read_dump(data) {
        let bytes = write_dump(&m);
        let back = read_dump(&bytes).expect("rewritten dump decodes");
        assert_eq!(write_dump(&back), bytes);
    }
});
