#![no_main]

use crossbench::codec::{compress_bytes, decompress, ByteBlock};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(block) = ByteBlock::from_bytes(data) {
        if let Ok(raw) = decompress(&block) {
            assert_eq!(raw.data.len() as u64, block.uncompressed_len);
        }
    }
    // Any input must survive a compress/decompress round trip.
    let level = data.first().map_or(0, |b| b % 10);
    let packed = compress_bytes(data, level).unwrap();
    assert_eq!(decompress(&packed).unwrap().data, data);
});
