/** Single-page wiring: session list, setup form, review console, heatmap. */

import { ApiClient } from './api';
import { renderHeatmap } from './heatmap';
import { ReviewView } from './views/review';
import { SetupView } from './views/setup';
import type { ThemeSetPayload } from './types';

export function mount(root: HTMLElement): void {
  const client = new ApiClient('');
  const nav = document.createElement('nav');
  const main = document.createElement('main');
  root.append(nav, main);

  const openReview = (sid: string) => {
    const view = new ReviewView(client, sid);
    void view.render(main);
    renderHeatmapSection(client, sid, main);
  };

  const refreshNav = async () => {
    nav.innerHTML = '';
    const newButton = document.createElement('button');
    newButton.textContent = 'New session';
    newButton.addEventListener('click', () => {
      new SetupView(client, (summary) => {
        void refreshNav();
        openReview(summary.session_id);
      }).render(main);
    });
    nav.appendChild(newButton);
    for (const session of await client.listSessions()) {
      const button = document.createElement('button');
      button.textContent = `${session.session_id} (${session.phase})`;
      button.addEventListener('click', () => openReview(session.session_id));
      nav.appendChild(button);
    }
  };
  void refreshNav();
}

function renderHeatmapSection(
  client: ApiClient,
  sid: string,
  main: HTMLElement,
): void {
  const section = document.createElement('section');
  section.className = 'heatmap-section';
  const upload = document.createElement('input');
  upload.type = 'file';
  upload.accept = '.json';
  const target = document.createElement('div');
  const error = document.createElement('p');
  error.className = 'errors';
  upload.addEventListener('change', async () => {
    error.textContent = '';
    const file = upload.files?.[0];
    if (!file) return;
    let reference: ThemeSetPayload;
    try {
      reference = JSON.parse(await file.text());
    } catch (err) {
      error.textContent = `reference parse failure: ${err}`;
      return;
    }
    const response = await client.metrics(sid, reference);
    renderHeatmap(target, response.heatmap, response.report.theta);
  });
  section.append(upload, error, target);
  main.appendChild(section);
}
