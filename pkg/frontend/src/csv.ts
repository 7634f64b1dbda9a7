/** Reader/writer for the sweep CSV convention (in:/out: columns + img).
 *
 * Raw cell text is preserved alongside parsed numbers so that an
 * unmodified table serializes back to the identical file.
 */

export interface SweepTable {
  header: string[];
  /** raw cell strings, one array per data row */
  cells: string[][];
  /** parsed numeric values per row, keyed by header (img stays a string) */
  rows: Record<string, number | string>[];
}

export class CsvParseError extends Error {
  constructor(message: string, readonly row: number) {
    super(`row ${row}: ${message}`);
  }
}

export function parseSweepCsv(text: string): SweepTable {
  const lines = text.split("\n");
  while (lines.length && lines[lines.length - 1] === "") lines.pop();
  if (!lines.length) throw new CsvParseError("empty file", 0);

  const header = lines[0].split(",");
  const hasData = header.some((h) => h.startsWith("in:") || h.startsWith("out:"));
  if (!hasData) throw new CsvParseError("no in:/out: columns in header", 0);

  const cells: string[][] = [];
  const rows: Record<string, number | string>[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new CsvParseError(
        `expected ${header.length} cells, found ${parts.length}`,
        i,
      );
    }
    const row: Record<string, number | string> = {};
    for (let c = 0; c < header.length; c++) {
      const key = header[c];
      if (key === "img") {
        row[key] = parts[c];
        continue;
      }
      const value = Number(parts[c]);
      if (parts[c] === "" || Number.isNaN(value)) {
        throw new CsvParseError(`column ${key}: not a number (${parts[c]!})`, i);
      }
      row[key] = value;
    }
    cells.push(parts);
    rows.push(row);
  }
  return { header, cells, rows };
}

export function serializeSweepCsv(table: SweepTable): string {
  const lines = [table.header.join(",")];
  for (const row of table.cells) lines.push(row.join(","));
  return lines.join("\n") + "\n";
}

export function numericColumns(table: SweepTable): string[] {
  return table.header.filter((h) => h !== "img");
}
