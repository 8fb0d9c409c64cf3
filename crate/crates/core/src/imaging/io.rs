use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, Frame};

pub fn save_frame_png(frame: &Frame, path: &Path) -> Result<()> {
    let img = image::RgbImage::from_raw(frame.width(), frame.height(), frame.pixels().to_vec())
        .expect("frame buffer length is validated on construction");
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

pub fn load_frame_png(path: &Path) -> Result<Frame> {
    let img = image::open(path)?.to_rgb8();
    Frame::new(img.width(), img.height(), img.into_raw())
}

/// Binary (P5) PGM with maxval 255.
pub fn write_pgm(width: u32, height: u32, bytes: &[u8], path: &Path) -> Result<()> {
    let expected = width as usize * height as usize;
    if bytes.len() != expected {
        return Err(Error::BufferLength {
            width,
            height,
            expected,
            got: bytes.len(),
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<(u32, u32, Vec<u8>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    parse_pgm(&data)
}

fn parse_pgm(data: &[u8]) -> Result<(u32, u32, Vec<u8>)> {
    let err = |pos: usize, message: &str| Error::Parse {
        offset: pos as u64,
        message: message.to_string(),
    };
    if data.len() < 2 || &data[0..2] != b"P5" {
        return Err(err(0, "expected P5 magic"));
    }
    let mut pos = 2usize;
    let mut fields = [0u64; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and '#' comments between header tokens.
        loop {
            match data.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < data.len() && data[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(err(pos, "truncated header")),
            }
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(err(pos, "expected integer"));
        }
        let text = std::str::from_utf8(&data[start..pos]).expect("digits are ascii");
        *field = text
            .parse()
            .map_err(|_| err(start, "integer out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(err(pos, "only maxval 255 is supported"));
    }
    if width == 0 || height == 0 || width > u32::MAX as u64 || height > u32::MAX as u64 {
        return Err(err(pos, "bad dimensions"));
    }
    match data.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(err(pos, "expected single whitespace before payload")),
    }
    let expected = width as usize * height as usize;
    if data.len() - pos < expected {
        return Err(err(data.len(), "truncated payload"));
    }
    Ok((width as u32, height as u32, data[pos..pos + expected].to_vec()))
}

/// Mask pixels export as 255, clear pixels as 0.
pub fn mask_to_pgm(mask: &BinaryMask, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_pgm(mask.width(), mask.height(), &bytes, path)
}

/// Bytes above 127 read back as set.
pub fn mask_from_pgm(path: &Path) -> Result<BinaryMask> {
    let (w, h, bytes) = read_pgm(path)?;
    BinaryMask::from_bits(w, h, bytes.iter().map(|&b| b > 127).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let bytes: Vec<u8> = (0..20u8).map(|i| i * 13).collect();
        write_pgm(5, 4, &bytes, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let (w, h, back) = read_pgm(&path).unwrap();
        assert_eq!((w, h), (5, 4));
        assert_eq!(back, bytes);
        write_pgm(w, h, &back, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.pgm");
        let mut m = BinaryMask::new(7, 3).unwrap();
        m.set(0, 0, true);
        m.set(2, 6, true);
        m.set(1, 3, true);
        mask_to_pgm(&m, &path).unwrap();
        assert_eq!(mask_from_pgm(&path).unwrap(), m);
    }

    #[test]
    fn png_round_trip_preserves_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.png");
        let pixels: Vec<u8> = (0..5 * 4 * 3).map(|i| (i * 7 % 256) as u8).collect();
        let f = Frame::new(5, 4, pixels).unwrap();
        save_frame_png(&f, &path).unwrap();
        assert_eq!(load_frame_png(&path).unwrap(), f);
    }

    #[test]
    fn parse_errors_name_the_offset() {
        match parse_pgm(b"P6\n1 1\n255\n\0") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("unexpected: {other:?}"),
        }
        let input = b"P5\n2 2\n255\n\0\0"; // payload 2 bytes short of 4
        match parse_pgm(input) {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, input.len() as u64);
                assert!(message.contains("truncated"));
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn header_comments_are_skipped() {
        let (w, h, bytes) = parse_pgm(b"P5\n# cmt\n2 1\n255\n\x01\x02").unwrap();
        assert_eq!((w, h), (2, 1));
        assert_eq!(bytes, vec![1, 2]);
    }
}
