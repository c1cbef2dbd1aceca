//! Binary tensor serialization.
//!
//! Record layout, all little-endian:
//!   magic "STTK" | version u32 | rank u32 | dims rank x u32 | payload f32...
//!
//! A named weight file is a sequence of records, each prefixed with
//! `name_len u32 | name bytes (utf-8)`.

use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"STTK";
const VERSION: u32 = 1;

/// An n-dimensional f32 array with explicit dims.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "tensor payload has {} values, dims imply {expected}",
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    /// Narrowing conversion; storage is always f32.
    pub fn from_f64(dims: &[usize], data: &[f64]) -> Self {
        let expected: usize = dims.iter().product();
        assert_eq!(data.len(), expected, "tensor payload does not match dims");
        Tensor {
            dims: dims.to_vec(),
            data: data.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.dims.len() as u32).to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::BadTensorFile("bad magic".into()));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::BadTensorFile(format!(
                "unsupported version {version}"
            )));
        }
        let rank = read_u32(r)? as usize;
        if rank > 8 {
            return Err(Error::BadTensorFile(format!("implausible rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u32(r)? as usize);
        }
        let count: usize = dims.iter().product();
        let mut data = Vec::with_capacity(count);
        let mut buf = [0u8; 4];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            data.push(f32::from_le_bytes(buf));
        }
        Ok(Tensor { dims, data })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// Write a sequence of name-prefixed tensor records.
pub fn write_named<W: Write>(w: &mut W, records: &[(String, Tensor)]) -> Result<()> {
    for (name, tensor) in records {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        tensor.write_to(w)?;
    }
    Ok(())
}

/// Read name-prefixed tensor records until end of stream.
pub fn read_named<R: Read>(r: &mut R) -> Result<Vec<(String, Tensor)>> {
    let mut records = Vec::new();
    loop {
        let mut len_buf = [0u8; 4];
        match r.read_exact(&mut len_buf) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let name_len = u32::from_le_bytes(len_buf) as usize;
        if name_len > 4096 {
            return Err(Error::BadTensorFile(format!(
                "implausible name length {name_len}"
            )));
        }
        let mut name_buf = vec![0u8; name_len];
        r.read_exact(&mut name_buf)?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| Error::BadTensorFile("record name is not utf-8".into()))?;
        records.push((name, Tensor::read_from(r)?));
    }
    Ok(records)
}

pub fn save_named(path: &std::path::Path, records: &[(String, Tensor)]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_named(&mut file, records)?;
    file.flush()?;
    Ok(())
}

pub fn load_named(path: &std::path::Path) -> Result<Vec<(String, Tensor)>> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_named(&mut file)
}
