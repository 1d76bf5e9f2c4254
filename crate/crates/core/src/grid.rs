//! Row-major 2D grid container and cell coordinates.

/// Cell coordinate: `x` is the column, `y` the row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    cells: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self { width, height, cells: vec![value; width * height] }
    }
}

impl<T> Grid<T> {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    #[inline]
    pub fn idx(&self, c: Cell) -> usize {
        debug_assert!(self.in_bounds(c));
        c.y as usize * self.width + c.x as usize
    }

    #[inline]
    pub fn get(&self, c: Cell) -> &T {
        &self.cells[self.idx(c)]
    }

    #[inline]
    pub fn get_mut(&mut self, c: Cell) -> &mut T {
        let i = self.idx(c);
        &mut self.cells[i]
    }

    pub fn try_get(&self, c: Cell) -> Option<&T> {
        self.in_bounds(c).then(|| self.get(c))
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [T] {
        &mut self.cells
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = (Cell, &T)> + '_ {
        self.cells.iter().enumerate().map(move |(i, v)| {
            (Cell::new((i % self.width) as i32, (i / self.width) as i32), v)
        })
    }
}

/// 8-neighborhood offsets: the four axis moves first, then diagonals.
pub const NEIGHBORS_8: [(i32, i32); 8] =
    [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// 4-neighborhood offsets.
pub const NEIGHBORS_4: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
