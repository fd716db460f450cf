// Tiny DOM construction helpers; no framework, no templates.

type Attrs = Record<string, string | EventListener>;
type Child = Node | string;

export function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const el = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      el.addEventListener(key.replace(/^on/, ""), value);
    } else if (key === "class") {
      el.className = value;
    } else if (key === "value" && "value" in el) {
      (el as HTMLInputElement).value = value;
    } else {
      el.setAttribute(key, value);
    }
  }
  el.append(...children);
  return el;
}

export function clear(el: HTMLElement): void {
  while (el.firstChild) el.removeChild(el.firstChild);
}

/** Display formatting for numbers that came out of API payloads. */
export function fmt(value: number | null | undefined, digits = 3): string {
  if (value === null || value === undefined) return "-";
  return value.toFixed(digits);
}
