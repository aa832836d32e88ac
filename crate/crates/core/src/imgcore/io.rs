use std::fs;
use std::io::Cursor;
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    /// Binary PGM (P5), maxval 255.
    Pgm,
    /// 8-bit grayscale PNG.
    Png,
}

impl ImageFormat {
    /// Guesses the format from a file extension; anything but `png` is PGM.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("png") => ImageFormat::Png,
            _ => ImageFormat::Pgm,
        }
    }
}

/// Loads a P5 PGM or 8-bit grayscale PNG, detected by magic bytes.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::read_io(path, e))?;
    decode(&bytes)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && (b'1'..=b'7').contains(&bytes[1]) {
        Err(Error::UnsupportedFormat(format!(
            "netpbm P{} (only binary P5 graymaps are supported)",
            bytes[1] as char
        )))
    } else {
        Err(Error::UnsupportedFormat("unknown magic bytes".into()))
    }
}

pub fn save_image(img: &GrayImage, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        ImageFormat::Pgm => encode_pgm(img),
        ImageFormat::Png => encode_png(img)?,
    };
    fs::write(path, bytes).map_err(|e| Error::write_io(path, e))
}

pub(crate) fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::CorruptImage(format!("PGM header: missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptImage(format!("PGM header: bad {what}")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval == 0 {
        return Err(Error::CorruptImage("PGM maxval 0".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedFormat(format!("PGM maxval {maxval} (>8-bit)")));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::CorruptImage("PGM header not terminated".into())),
    }
    if width == 0 || height == 0 {
        return Err(Error::CorruptImage(format!("PGM dimensions {width}x{height}")));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::CorruptImage("PGM dimensions overflow".into()))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < n {
        return Err(Error::CorruptImage(format!(
            "PGM payload truncated: {} of {n} bytes",
            payload.len()
        )));
    }
    GrayImage::new(width, height, payload[..n].to_vec())
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::CorruptImage(format!("PNG: {e}")))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::UnsupportedFormat(format!(
            "PNG color type {:?} (single-channel grayscale required)",
            info.color_type
        )));
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "PNG bit depth {:?} (8-bit required)",
            info.bit_depth
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::CorruptImage("PNG: image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::CorruptImage(format!("PNG: {e}")))?;
    // rows are tightly packed for 8-bit single-channel output
    buf.truncate(frame.buffer_size());
    if buf.len() != width * height {
        return Err(Error::CorruptImage(format!(
            "PNG: decoded {} bytes for {width}x{height}",
            buf.len()
        )));
    }
    GrayImage::new(width, height, buf)
}

fn encode_png(img: &GrayImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::UnsupportedFormat(format!("PNG encode: {e}")))?;
        writer
            .write_image_data(img.pixels())
            .map_err(|e| Error::UnsupportedFormat(format!("PNG encode: {e}")))?;
        writer
            .finish()
            .map_err(|e| Error::UnsupportedFormat(format!("PNG encode: {e}")))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_tiny_pgm() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 7]);
        let img = decode(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0, 255, 128, 7]);
    }

    #[test]
    fn pgm_header_with_comments() {
        let mut bytes = b"P5 # made by hand\n3\n# another\n1 255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        let img = decode(&bytes).unwrap();
        assert_eq!(img.pixels(), &[1, 2, 3]);
    }

    #[test]
    fn single_pixel_encoding_is_exact() {
        let img = GrayImage::new(1, 1, vec![42]).unwrap();
        let mut expected = b"P5\n1 1\n255\n".to_vec();
        expected.push(42);
        assert_eq!(encode_pgm(&img), expected);
    }

    #[test]
    fn truncated_pgm_is_corrupt() {
        let mut bytes = b"P5\n4 4\n255\n".to_vec();
        bytes.extend_from_slice(&[0; 10]);
        assert!(matches!(decode(&bytes), Err(Error::CorruptImage(_))));
    }

    #[test]
    fn sixteen_bit_pgm_is_unsupported() {
        let mut bytes = b"P5\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0, 0]);
        assert!(matches!(decode(&bytes), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn other_magics_are_unsupported() {
        assert!(matches!(
            decode(b"P6\n1 1\n255\n\0\0\0"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(decode(b"GIF89a"), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn rgb_png_is_unsupported() {
        let mut out = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut out, 2, 1);
            encoder.set_color(png::ColorType::Rgb);
            encoder.set_depth(png::BitDepth::Eight);
            let mut writer = encoder.write_header().unwrap();
            writer.write_image_data(&[1, 2, 3, 4, 5, 6]).unwrap();
        }
        assert!(matches!(decode(&out), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn sixteen_bit_png_is_unsupported() {
        let mut out = Vec::new();
        {
            let mut encoder = png::Encoder::new(&mut out, 1, 1);
            encoder.set_color(png::ColorType::Grayscale);
            encoder.set_depth(png::BitDepth::Sixteen);
            let mut writer = encoder.write_header().unwrap();
            writer.write_image_data(&[1, 2]).unwrap();
        }
        assert!(matches!(decode(&out), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn png_round_trip_in_memory() {
        let img = GrayImage::from_fn(5, 3, |x, y| (x * 50 + y) as u8);
        let bytes = encode_png(&img).unwrap();
        assert_eq!(decode(&bytes).unwrap(), img);
    }
}
