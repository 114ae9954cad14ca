use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Labelled images stored as one contiguous `[N, C, S, S]` buffer in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    channels: usize,
    size: usize,
    images: Vec<f32>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(channels: usize, size: usize, images: Vec<f32>, labels: Vec<u8>) -> Result<Self> {
        if channels == 0 || size == 0 {
            return Err(Error::Dataset("channels and size must be positive".into()));
        }
        let per = channels * size * size;
        if images.len() != per * labels.len() {
            return Err(Error::Dataset(format!(
                "{} pixel values for {} images of {per}",
                images.len(),
                labels.len()
            )));
        }
        Ok(Dataset {
            channels,
            size,
            images,
            labels,
        })
    }

    pub fn from_images(images: &[Tensor], labels: Vec<u8>) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::Dataset("no images given".into()))?;
        let &[c, h, w] = first.shape() else {
            return Err(Error::Dataset(format!("image shape {:?} is not [C,H,W]", first.shape())));
        };
        if h != w {
            return Err(Error::Dataset("images must be square".into()));
        }
        let mut data = Vec::with_capacity(first.len() * images.len());
        for img in images {
            if img.shape() != first.shape() {
                return Err(Error::Dataset("images differ in shape".into()));
            }
            data.extend_from_slice(img.data());
        }
        Dataset::new(c, h, data, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn image_len(&self) -> usize {
        self.channels * self.size * self.size
    }

    pub fn image(&self, i: usize) -> &[f32] {
        let per = self.image_len();
        &self.images[i * per..(i + 1) * per]
    }

    pub fn image_tensor(&self, i: usize) -> Tensor {
        Tensor::new(vec![self.channels, self.size, self.size], self.image(i).to_vec())
            .expect("image shape")
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn first(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            channels: self.channels,
            size: self.size,
            images: self.images[..n * self.image_len()].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    /// Apply `f` to every image; `f` may change the channel count.
    pub fn map_images(&self, mut f: impl FnMut(usize, &Tensor) -> Result<Tensor>) -> Result<Dataset> {
        let mut out: Option<(usize, Vec<f32>)> = None;
        for i in 0..self.len() {
            let img = f(i, &self.image_tensor(i))?;
            let &[c, h, w] = img.shape() else {
                return Err(Error::Dataset("transform must return [C,H,W]".into()));
            };
            if h != self.size || w != self.size {
                return Err(Error::Dataset("transform changed the image size".into()));
            }
            let (channels, data) =
                out.get_or_insert_with(|| (c, Vec::with_capacity(c * h * w * self.len())));
            if *channels != c {
                return Err(Error::Dataset("transform produced inconsistent channels".into()));
            }
            data.extend_from_slice(img.data());
        }
        let (channels, images) = out.unwrap_or((self.channels, Vec::new()));
        Dataset::new(channels, self.size, images, self.labels.clone())
    }

    /// Stack the given images into an `[N, C, S, S]` batch.
    pub fn batch(&self, indices: &[usize]) -> (Tensor, Vec<usize>) {
        let per = self.image_len();
        let mut data = Vec::with_capacity(per * indices.len());
        for &i in indices {
            data.extend_from_slice(self.image(i));
        }
        let labels = indices.iter().map(|&i| self.labels[i] as usize).collect();
        let t = Tensor::new(vec![indices.len(), self.channels, self.size, self.size], data)
            .expect("batch shape");
        (t, labels)
    }
}
