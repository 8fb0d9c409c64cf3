use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::FlowField;

/// Magic bytes at the start of a flow file ("PIEH" as ASCII).
pub const FLO_MAGIC: [u8; 4] = *b"PIEH";

/// Layout: magic, i32 LE width, i32 LE height, then row-major interleaved
/// (u, v) pairs as f32 LE.
pub fn write_flo(flow: &FlowField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&FLO_MAGIC)?;
    w.write_all(&(flow.width() as i32).to_le_bytes())?;
    w.write_all(&(flow.height() as i32).to_le_bytes())?;
    for value in flow.data() {
        w.write_all(&value.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    parse_flo(&data)
}

pub fn parse_flo(data: &[u8]) -> Result<FlowField> {
    let parse_err = |offset: usize, message: String| Error::Parse {
        offset: offset as u64,
        message,
    };
    if data.len() < 4 || data[0..4] != FLO_MAGIC {
        return Err(parse_err(0, "bad magic, expected PIEH".to_string()));
    }
    if data.len() < 12 {
        return Err(parse_err(data.len(), "truncated header".to_string()));
    }
    let width = i32::from_le_bytes(data[4..8].try_into().expect("4 bytes"));
    let height = i32::from_le_bytes(data[8..12].try_into().expect("4 bytes"));
    if width <= 0 || height <= 0 {
        return Err(parse_err(4, format!("bad dimensions {width}x{height}")));
    }
    let count = width as usize * height as usize * 2;
    let expected_len = 12 + count * 4;
    if data.len() < expected_len {
        return Err(parse_err(
            data.len(),
            format!("truncated payload, expected {expected_len} bytes"),
        ));
    }
    let mut values = Vec::with_capacity(count);
    for chunk in data[12..expected_len].chunks_exact(4) {
        values.push(f32::from_le_bytes(chunk.try_into().expect("4 bytes")));
    }
    FlowField::from_data(width as u32, height as u32, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_bytes_for_single_pixel_field() {
        // 1x1 field with (u, v) = (1.5, -2.0): 20 bytes total.
        let mut f = FlowField::zeros(1, 1).unwrap();
        f.set(0, 0, 1.5, -2.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.flo");
        write_flo(&f, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(
            bytes,
            vec![
                0x50, 0x49, 0x45, 0x48, // PIEH
                0x01, 0x00, 0x00, 0x00, // width 1
                0x01, 0x00, 0x00, 0x00, // height 1
                0x00, 0x00, 0xC0, 0x3F, // 1.5f32
                0x00, 0x00, 0x00, 0xC0, // -2.0f32
            ]
        );
    }

    #[test]
    fn round_trip_is_bit_exact_including_odd_floats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.flo");
        let mut f = FlowField::zeros(3, 2).unwrap();
        f.set(0, 0, f32::MIN_POSITIVE, -0.0);
        f.set(0, 2, 1e9, -1e-9);
        f.set(1, 1, std::f32::consts::PI, f32::MAX);
        write_flo(&f, &path).unwrap();
        let back = read_flo(&path).unwrap();
        assert_eq!(back.width(), 3);
        assert_eq!(back.height(), 2);
        let same_bits = f
            .data()
            .iter()
            .zip(back.data())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same_bits);
    }

    #[test]
    fn bad_magic_reports_offset_zero() {
        match parse_flo(b"PIEXrest") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_reports_end_offset() {
        let mut data = Vec::new();
        data.extend_from_slice(&FLO_MAGIC);
        data.extend_from_slice(&2i32.to_le_bytes());
        data.extend_from_slice(&2i32.to_le_bytes());
        data.extend_from_slice(&[0u8; 10]); // needs 32 payload bytes
        match parse_flo(&data) {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 22);
                assert!(message.contains("truncated"));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn negative_dimensions_are_rejected() {
        let mut data = Vec::new();
        data.extend_from_slice(&FLO_MAGIC);
        data.extend_from_slice(&(-1i32).to_le_bytes());
        data.extend_from_slice(&2i32.to_le_bytes());
        assert!(matches!(parse_flo(&data), Err(Error::Parse { .. })));
    }
}
