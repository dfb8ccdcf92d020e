import { mount } from './app';

mount(document.getElementById('app') as HTMLElement);
