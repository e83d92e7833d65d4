/** Group the flat category registry into a two-level tree for the browser
 * panel, using the "Area / Leaf" name-prefix convention. Names without a
 * separator land under a catch-all group. */

import type { CategoryInfo } from "./types.js";

export interface CategoryGroup {
  label: string;
  categories: CategoryInfo[];
}

const SEPARATOR = "/";
const FALLBACK_GROUP = "Weitere";

export function groupByPrefix(categories: CategoryInfo[]): CategoryGroup[] {
  const groups = new Map<string, CategoryInfo[]>();
  for (const category of categories) {
    const split = category.name.indexOf(SEPARATOR);
    const label =
      split > 0 ? category.name.slice(0, split).trim() || FALLBACK_GROUP : FALLBACK_GROUP;
    const bucket = groups.get(label);
    if (bucket) {
      bucket.push(category);
    } else {
      groups.set(label, [category]);
    }
  }
  return [...groups.entries()]
    .map(([label, cats]) => ({
      label,
      categories: [...cats].sort((a, b) => a.name.localeCompare(b.name)),
    }))
    .sort((a, b) => a.label.localeCompare(b.label));
}

/** Leaf display name: the part after the group prefix. */
export function leafName(category: CategoryInfo): string {
  const split = category.name.indexOf(SEPARATOR);
  return split > 0 ? category.name.slice(split + 1).trim() : category.name;
}
