//! PNG encode/decode for [`RasterImage`]. Non-interlaced RGBA8 with the
//! encoder's default settings; encoding is deterministic for identical
//! pixel data.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use scanpath_core::raster::RasterImage;

#[derive(Debug, thiserror::Error)]
pub enum PngError {
    #[error("png encode failed: {0}")]
    Encode(String),
    #[error("png decode failed: {0}")]
    Decode(String),
    #[error("unsupported png layout: {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>, PngError> {
    let mut bytes = Vec::new();
    {
        let mut encoder = png::Encoder::new(Cursor::new(&mut bytes), img.width(), img.height());
        encoder.set_color(png::ColorType::Rgba);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().map_err(|e| PngError::Encode(e.to_string()))?;
        writer
            .write_image_data(img.data())
            .map_err(|e| PngError::Encode(e.to_string()))?;
    }
    Ok(bytes)
}

pub fn decode_png(bytes: &[u8]) -> Result<RasterImage, PngError> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| PngError::Decode(e.to_string()))?;
    let mut buf = vec![0u8; reader.output_buffer_size().ok_or(PngError::Unsupported("image too large"))?];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| PngError::Decode(e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(PngError::Unsupported("only 8-bit images supported"));
    }
    buf.truncate(info.buffer_size());
    let (w, h) = (info.width, info.height);
    let rgba = match info.color_type {
        png::ColorType::Rgba => buf,
        png::ColorType::Rgb => buf.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&v| [v, v, v, 255]).collect(),
        png::ColorType::GrayscaleAlpha => {
            buf.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0], p[1]]).collect()
        }
        png::ColorType::Indexed => return Err(PngError::Unsupported("indexed color")),
    };
    RasterImage::from_raw(w, h, rgba).ok_or(PngError::Unsupported("size mismatch"))
}

pub fn write_png(path: &Path, img: &RasterImage) -> Result<(), PngError> {
    let bytes = encode_png(img)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_png(path: &Path) -> Result<RasterImage, PngError> {
    let bytes = fs::read(path)?;
    decode_png(&bytes)
}
