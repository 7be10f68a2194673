//! Serialize nalgebra matrices as nested JSON arrays (row-major).

pub mod matrix {
    use nalgebra::DMatrix;
    use serde::ser::{SerializeSeq, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(m.nrows()))?;
        for row in m.row_iter() {
            seq.serialize_element(&row.iter().copied().collect::<Vec<f64>>())?;
        }
        seq.end()
    }
}

pub mod vector {
    use nalgebra::DVector;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }
}

pub mod matrices {
    use nalgebra::DMatrix;
    use serde::ser::{SerializeSeq, Serializer};

    pub fn serialize<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        struct Rows<'a>(&'a DMatrix<f64>);
        impl serde::Serialize for Rows<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                super::matrix::serialize(self.0, s)
            }
        }
        let mut seq = s.serialize_seq(Some(ms.len()))?;
        for m in ms {
            seq.serialize_element(&Rows(m))?;
        }
        seq.end()
    }
}
